use clap::Parser;

fn main() {
    let cli = tdmargin::cli::Cli::parse();
    std::process::exit(tdmargin::cli::run(cli));
}
