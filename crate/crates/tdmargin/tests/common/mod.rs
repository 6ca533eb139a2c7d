//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use std::path::PathBuf;
use tdmargin::netmodel::{Branch, Bus, BusType, DistributionFeeder, TransmissionNetwork};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Fold a feeder into the transmission case as positive-sequence branches:
/// one bus per feeder node, line impedance `z_self_avg - z_mutual_avg`, and
/// transformer impedance on its own rating. Exact for phase-symmetric
/// feeders under balanced conditions, which is what makes it an independent
/// oracle for the boundary exchange. Loads are lumped three-phase totals
/// (the fixture uses constant-power loads so this is lossless of meaning).
pub fn fold_feeder_positive_sequence(
    tx: &TransmissionNetwork,
    bus_id: &str,
    feeder: &DistributionFeeder,
) -> TransmissionNetwork {
    let mut net = tx.clone();
    // The attachment replaces the bus's lumped load.
    if let Some(bus) = net.buses.iter_mut().find(|b| b.id == bus_id) {
        bus.load_mw = 0.0;
        bus.load_mvar = 0.0;
    }
    let s_base = net.s_base_mva;
    let prefix = |node: &str| format!("fold_{node}");

    let add_bus = |net: &mut TransmissionNetwork, id: String| {
        if !net.buses.iter().any(|b| b.id == id) {
            net.buses.push(Bus {
                id,
                bus_type: BusType::Pq,
                v_setpoint_pu: 1.0,
                load_mw: 0.0,
                load_mvar: 0.0,
            });
        }
    };

    // Node name mapping: the feeder root merges with the attachment bus.
    let map_node = |node: &str| -> String {
        if node == feeder.root_node {
            bus_id.to_string()
        } else {
            prefix(node)
        }
    };

    // Zone per node by walking transformer declarations: a section keeps the
    // zone, a transformer switches it. Walk edges until fixed point.
    use std::collections::BTreeMap;
    let mut zone: BTreeMap<String, String> = BTreeMap::new();
    zone.insert(feeder.root_node.clone(), feeder.zones[0].name.clone());
    let mut changed = true;
    while changed {
        changed = false;
        for s in &feeder.sections {
            for (a, b) in [(&s.from_node, &s.to_node), (&s.to_node, &s.from_node)] {
                if let Some(z) = zone.get(a.as_str()).cloned() {
                    if !zone.contains_key(b.as_str()) {
                        zone.insert(b.clone(), z);
                        changed = true;
                    }
                }
            }
        }
        for t in &feeder.transformers {
            if zone.contains_key(&t.from_node) && !zone.contains_key(&t.to_node) {
                zone.insert(t.to_node.clone(), t.to_zone.clone());
                changed = true;
            }
            if zone.contains_key(&t.to_node) && !zone.contains_key(&t.from_node) {
                zone.insert(t.from_node.clone(), t.from_zone.clone());
                changed = true;
            }
        }
    }

    for s in &feeder.sections {
        let cfg = &feeder.line_configs[&s.config];
        // Positive-sequence impedance from the averaged self and mutual
        // terms, in total ohms.
        let mut zs = num_complex::Complex64::default();
        let mut zm = num_complex::Complex64::default();
        for i in 0..3 {
            zs += cfg.z_ohm_per_km[i][i];
        }
        zs /= 3.0;
        zm += cfg.z_ohm_per_km[0][1] + cfg.z_ohm_per_km[0][2] + cfg.z_ohm_per_km[1][2];
        zm /= 3.0;
        let z1_ohm = (zs - zm) * s.length_km;
        let kv = feeder.zone_kv(&zone[&s.from_node]).expect("zone resolved");
        let z_base = kv * kv / s_base;
        let (from, to) = (map_node(&s.from_node), map_node(&s.to_node));
        add_bus(&mut net, from.clone());
        add_bus(&mut net, to.clone());
        net.branches.push(Branch {
            from,
            to,
            r_pu: z1_ohm.re / z_base,
            x_pu: z1_ohm.im / z_base,
            b_pu: 0.0,
            rating_mva: 0.0,
        });
    }
    for t in &feeder.transformers {
        let (from, to) = (map_node(&t.from_node), map_node(&t.to_node));
        add_bus(&mut net, from.clone());
        add_bus(&mut net, to.clone());
        let scale = s_base / t.rating_mva;
        net.branches.push(Branch {
            from,
            to,
            r_pu: t.series_r_pu * scale,
            x_pu: t.series_x_pu * scale,
            b_pu: 0.0,
            rating_mva: t.rating_mva,
        });
    }
    for l in &feeder.loads {
        let id = map_node(&l.node);
        let bus = net
            .buses
            .iter_mut()
            .find(|b| b.id == id)
            .expect("load node folded");
        bus.load_mw += l.p0_mw;
        bus.load_mvar += l.q0_mvar;
    }
    net
}
