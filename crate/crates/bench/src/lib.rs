//! Shared fixtures for the criterion benches.

use tubelogic::netlist::{expand, parse, Circuit};
use tubelogic::PneumaticNetwork;

pub const RING3: &str = include_str!("../../../netlists/ring3.tbl");
pub const NAND: &str = include_str!("../../../netlists/nand.tbl");

/// A ring of `n` stages with the calibrated device parameters.
pub fn ring_text(n: usize) -> String {
    let taps: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    format!(
        "source SUP pressure=145kPa\n\
         ring osc n={n} supply=SUP taps={} deflate=10kPa sense=5.5cm compliance=0.03848 gopen=649.4\n\
         probe q0.sense\n",
        taps.join(",")
    )
}

/// A netlist with `gates` independent NOR gates, for parser throughput.
pub fn wide_text(gates: usize) -> String {
    let mut s = String::from("source SUP pressure=145kPa\natm ATM\n");
    for i in 0..gates {
        s += &format!("gate NOR g{i} in=a{i},b{i} out=q{i} supply=SUP device_len=7.5cm\n");
    }
    s
}

pub fn circuit(text: &str) -> Circuit {
    parse(text).expect("fixture parses")
}

pub fn network(text: &str) -> PneumaticNetwork {
    expand(&circuit(text)).expect("fixture expands")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(network(&ring_text(7)).valves.len(), 7);
        assert_eq!(network(&wide_text(10)).valves.len(), 20);
        network(RING3);
        network(NAND);
    }
}
