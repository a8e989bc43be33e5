//! Radio energy model and network-lifetime accounting.
//!
//! Transmission cost has an electronics term and an amplifier term that
//! scales with distance to the path-loss exponent; reception and
//! aggregation cost flat per-bit and per-event rates. Lifetime is the
//! round count until the total energy budget is drained at the per-round
//! burn rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Radio and duty-cycle parameters.
///
/// `tx_energy` and `node_energy_per_round` take distances in the same
/// unit that `eps2` was calibrated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams<F> {
    /// Payload length in bits.
    pub packet_len_bits: F,
    /// Receive energy per bit.
    pub beta: F,
    /// Transmit electronics energy per bit.
    pub eps1: F,
    /// Amplifier energy per bit per unit distance^gamma.
    pub eps2: F,
    /// Path-loss exponent, at least 2.
    pub gamma: F,
    /// Packets transmitted per round.
    pub t_rate: F,
    /// Packets received per round.
    pub r_rate: F,
    /// Aggregation events per round.
    pub a_rate: F,
    /// Energy per aggregation event.
    pub j_agg: F,
    /// Initial battery energy per node.
    pub e_init: F,
    /// Multiplier on receive traffic.
    pub k_traffic: F,
}

impl<F: Real> Default for EnergyParams<F> {
    fn default() -> Self {
        let f = |x: f64| F::from_f64(x).expect("parameter fits the scalar type");
        EnergyParams {
            packet_len_bits: f(512.0),
            beta: f(50e-9),
            eps1: f(50e-9),
            eps2: f(10e-12),
            gamma: f(4.8),
            t_rate: f(100.0),
            r_rate: f(100.0),
            a_rate: f(10.0),
            j_agg: f(50e-7),
            e_init: f(15.4),
            k_traffic: f(1.0),
        }
    }
}

impl<F: Real> EnergyParams<F> {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("packet_len_bits", self.packet_len_bits),
            ("beta", self.beta),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("gamma", self.gamma),
            ("t_rate", self.t_rate),
            ("r_rate", self.r_rate),
            ("a_rate", self.a_rate),
            ("j_agg", self.j_agg),
            ("e_init", self.e_init),
            ("k_traffic", self.k_traffic),
        ];
        for (name, v) in pairs {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "energy parameter {name} must be positive and finite"
                )));
            }
        }
        if self.gamma < F::from_f64(2.0).unwrap() {
            return Err(Error::Domain("gamma must be at least 2".into()));
        }
        Ok(())
    }

    /// Energy to receive one packet.
    pub fn rx_energy(&self) -> F {
        self.packet_len_bits * self.beta
    }

    /// Energy to transmit one packet over `distance`.
    pub fn tx_energy(&self, distance: F) -> Result<F> {
        if distance < F::zero() || !distance.is_finite() {
            return Err(Error::Domain("transmit distance must be non-negative".into()));
        }
        Ok(self.packet_len_bits * (self.eps1 + self.eps2 * distance.powf(self.gamma)))
    }

    /// Per-round burn of a relay forwarding over `distance`:
    /// transmit, k-scaled receive, and aggregation duty.
    pub fn node_energy_per_round(&self, distance: F) -> Result<F> {
        let tx = self.tx_energy(distance)?;
        Ok(self.t_rate * tx
            + self.k_traffic * self.r_rate * self.rx_energy()
            + self.a_rate * self.j_agg)
    }

    /// Battery left after `rounds` at the given per-round burn, floored
    /// at zero.
    pub fn remaining_energy(&self, distance: F, rounds: u64) -> Result<F> {
        let burn = self.node_energy_per_round(distance)?;
        let spent = F::from_u64(rounds).ok_or_else(|| {
            Error::Domain("round count exceeds the scalar range".into())
        })? * burn;
        Ok((self.e_init - spent).max(F::zero()))
    }
}

/// Rounds until `budget` is drained by the summed per-node burn rates.
pub fn lifetime_rounds<F: Real>(budget: F, per_node_burn: &[F]) -> Result<F> {
    if per_node_burn.is_empty() {
        return Err(Error::Domain("lifetime needs at least one burning node".into()));
    }
    let total: F = per_node_burn.iter().copied().sum();
    if !(total > F::zero()) {
        return Err(Error::Domain("total burn rate must be positive".into()));
    }
    if budget < F::zero() {
        return Err(Error::Domain("energy budget must be non-negative".into()));
    }
    Ok(budget / total)
}

/// Lifetime before and after the second deployment phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport<F> {
    /// Rounds sustained by the phase-1 network alone.
    pub initial_rounds: F,
    /// Rounds sustained once second-phase relays share the load.
    pub total_rounds: F,
    /// Gain from the second phase: `total_rounds - initial_rounds`.
    pub extra_rounds: F,
    /// Energy budget of the phase-1 deployment.
    pub initial_budget: F,
    /// Energy budget added by the second phase.
    pub added_budget: F,
}

/// Combines the two deployment phases into one report. `initial_burn`
/// holds the per-round burn of each phase-1 relay; `total_burn` covers
/// every relay after phase 2.
pub fn lifetime_report<F: Real>(
    initial_budget: F,
    added_budget: F,
    initial_burn: &[F],
    total_burn: &[F],
) -> Result<LifetimeReport<F>> {
    let initial_rounds = lifetime_rounds(initial_budget, initial_burn)?;
    let total_rounds = lifetime_rounds(initial_budget + added_budget, total_burn)?;
    Ok(LifetimeReport {
        initial_rounds,
        total_rounds,
        extra_rounds: total_rounds - initial_rounds,
        initial_budget,
        added_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> EnergyParams<f64> {
        EnergyParams::default()
    }

    #[test]
    fn defaults_validate() {
        p().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_fields_and_small_gamma() {
        let mut bad = p();
        bad.beta = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.e_init = -1.0;
        assert!(bad.validate().is_err());
        let mut bad = p();
        bad.gamma = 1.9;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn receive_energy_is_packet_times_beta() {
        assert_relative_eq!(p().rx_energy(), 512.0 * 50e-9, max_relative = 1e-12);
        assert_relative_eq!(p().rx_energy(), 2.56e-5, max_relative = 1e-12);
    }

    #[test]
    fn transmit_at_zero_distance_is_electronics_only() {
        assert_relative_eq!(p().tx_energy(0.0).unwrap(), 2.56e-5, max_relative = 1e-12);
    }

    #[test]
    fn transmit_at_hundred_meters_matches_frozen_value() {
        let mut params = p();
        params.eps2 = 1e-11;
        // 512 * (50e-9 + 1e-11 * 100^4.8)
        assert_relative_eq!(
            params.tx_energy(100.0).unwrap(),
            20.383112732339,
            max_relative = 1e-9
        );
    }

    #[test]
    fn transmit_rejects_negative_distance() {
        assert!(p().tx_energy(-1.0).is_err());
    }

    #[test]
    fn per_round_burn_at_zero_distance_matches_hand_sum() {
        // 100 * 2.56e-5 + 1 * 100 * 2.56e-5 + 10 * 50e-7
        assert_relative_eq!(
            p().node_energy_per_round(0.0).unwrap(),
            5.17e-3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn per_round_burn_is_strictly_increasing_in_distance_and_duty() {
        let base = p().node_energy_per_round(10.0).unwrap();
        assert!(p().node_energy_per_round(11.0).unwrap() > base);
        for bump in [
            |q: &mut EnergyParams<f64>| q.t_rate += 1.0,
            |q: &mut EnergyParams<f64>| q.r_rate += 1.0,
            |q: &mut EnergyParams<f64>| q.a_rate += 1.0,
            |q: &mut EnergyParams<f64>| q.k_traffic += 0.5,
        ] {
            let mut q = p();
            bump(&mut q);
            assert!(q.node_energy_per_round(10.0).unwrap() > base);
        }
    }

    #[test]
    fn remaining_energy_starts_full_and_floors_at_zero() {
        assert_relative_eq!(p().remaining_energy(10.0, 0).unwrap(), 15.4);
        assert_eq!(p().remaining_energy(50.0, u64::MAX / 2).unwrap(), 0.0);
    }

    #[test]
    fn remaining_energy_is_nonincreasing_in_rounds() {
        let mut last = f64::INFINITY;
        for rounds in [0, 1, 10, 100, 10_000] {
            let e = p().remaining_energy(20.0, rounds).unwrap();
            assert!(e <= last);
            last = e;
        }
    }

    #[test]
    fn lifetime_divides_budget_by_total_burn() {
        assert_relative_eq!(
            lifetime_rounds(10.0, &[2.0, 3.0]).unwrap(),
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lifetime_rejects_empty_or_zero_burn() {
        assert!(lifetime_rounds::<f64>(1.0, &[]).is_err());
        assert!(lifetime_rounds(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn duplicating_nodes_and_budget_leaves_lifetime_unchanged() {
        let burn = vec![0.004, 0.007, 0.0052];
        let doubled: Vec<f64> = burn.iter().chain(burn.iter()).copied().collect();
        let one = lifetime_rounds(30.8, &burn).unwrap();
        let two = lifetime_rounds(61.6, &doubled).unwrap();
        assert_relative_eq!(one, two, max_relative = 1e-12);
    }

    #[test]
    fn report_combines_phases_and_extra_is_the_difference() {
        let r = lifetime_report(10.0, 5.0, &[2.0], &[2.0, 1.0]).unwrap();
        assert_relative_eq!(r.initial_rounds, 5.0);
        assert_relative_eq!(r.total_rounds, 5.0);
        assert_relative_eq!(r.extra_rounds, 0.0);

        let r = lifetime_report(10.0, 10.0, &[2.0], &[2.0, 2.0]).unwrap();
        assert_relative_eq!(r.initial_rounds, 5.0);
        assert_relative_eq!(r.total_rounds, 5.0);

        let r = lifetime_report(10.0, 20.0, &[2.0], &[2.0, 1.0]).unwrap();
        assert_relative_eq!(r.total_rounds, 10.0);
        assert_relative_eq!(r.extra_rounds, 5.0);
    }

    #[test]
    fn works_in_single_precision() {
        let q: EnergyParams<f32> = EnergyParams::default();
        q.validate().unwrap();
        assert!(q.node_energy_per_round(10.0).unwrap() > 0.0);
    }
}
