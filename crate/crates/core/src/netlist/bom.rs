use std::fmt;

use serde::Serialize;

use super::ast::{Circuit, Kind};

/// Cost of one device, US cents.
pub const UNIT_COST_CENTS: u64 = 45;

struct Item {
    description: &'static str,
    supplier: &'static str,
    unit: &'static str,
    per_device: f64,
    cents: u64,
}

const ITEMS: [Item; 4] = [
    Item {
        description: "Boba straw, ALINK 100 1/2\"",
        supplier: "Amazon.com",
        unit: "pcs",
        per_device: 1.0,
        cents: 8,
    },
    Item {
        description: "Twisting balloon, Koogel 260Q",
        supplier: "Amazon.com",
        unit: "pcs",
        per_device: 1.0,
        cents: 5,
    },
    Item {
        description: "PVC tubing, 1 mm ID",
        supplier: "McMaster-Carr",
        unit: "cm",
        per_device: 30.0,
        cents: 29,
    },
    Item {
        description: "Parafilm M",
        supplier: "Amazon.com",
        unit: "cm²",
        per_device: 6.0,
        cents: 3,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BomLine {
    pub description: String,
    pub supplier: String,
    pub quantity: f64,
    pub unit: String,
    pub cost_cents: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BillOfMaterials {
    pub device_count: usize,
    pub lines: Vec<BomLine>,
    pub total_cents: u64,
}

impl BillOfMaterials {
    pub fn total_usd(&self) -> f64 {
        self.total_cents as f64 / 100.0
    }
}

fn dollars(cents: u64) -> String {
    format!("${}.{:02}", cents / 100, cents % 100)
}

impl fmt::Display for BillOfMaterials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(
                f,
                "{:<32} {:<14} {:>8} {:<4} {:>8}",
                l.description,
                l.supplier,
                l.quantity,
                l.unit,
                dollars(l.cost_cents)
            )?;
        }
        writeln!(
            f,
            "tubing per device: two 7.5 cm device tubes and one 15 cm pull-down"
        )?;
        let noun = if self.device_count == 1 { "device" } else { "devices" };
        writeln!(
            f,
            "{} {noun}, total {}",
            self.device_count,
            dollars(self.total_cents)
        )
    }
}

/// Kink-valve devices the circuit expands to.
pub fn device_count(circuit: &Circuit) -> usize {
    circuit
        .statements
        .iter()
        .map(|s| match s.kind {
            Kind::Valve => 1,
            Kind::Gate(g) => g.device_count(),
            Kind::Ring => s.number("n").unwrap_or(0.0) as usize,
            _ => 0,
        })
        .sum()
}

pub fn bom(circuit: &Circuit) -> BillOfMaterials {
    let n = device_count(circuit);
    let lines = ITEMS
        .iter()
        .map(|it| BomLine {
            description: it.description.to_string(),
            supplier: it.supplier.to_string(),
            quantity: it.per_device * n as f64,
            unit: it.unit.to_string(),
            cost_cents: it.cents * n as u64,
        })
        .collect();
    BillOfMaterials {
        device_count: n,
        lines,
        total_cents: UNIT_COST_CENTS * n as u64,
    }
}
