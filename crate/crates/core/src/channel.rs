//! Zero-forcing beamforming, uplink SINR/rate and backhaul SINR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::Scenario;

const COLUMN_SUM_TOL: f64 = 1e-6;
/// Relative norm below which a projected channel counts as zero.
const DEGENERATE_TOL: f64 = 1e-10;

/// Clustering fractions `a_{m,n}`; column `n` sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    membership: DMatrix<f64>,
}

impl ClusterAssignment {
    pub fn new(membership: DMatrix<f64>) -> Result<Self> {
        for (n, col) in membership.column_iter().enumerate() {
            if col.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
                return Err(Error::Domain(format!("user {n}: fraction outside [0, 1]")));
            }
            if (col.sum() - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::Domain(format!(
                    "user {n}: fractions sum to {}, not 1",
                    col.sum()
                )));
            }
        }
        Ok(ClusterAssignment { membership })
    }

    /// Every user served by AP `ap` alone.
    pub fn single(num_aps: usize, num_users: usize, ap: usize) -> Self {
        let mut a = DMatrix::zeros(num_aps, num_users);
        a.row_mut(ap).fill(1.0);
        ClusterAssignment { membership: a }
    }

    pub fn fraction(&self, m: usize, n: usize) -> f64 {
        self.membership[(m, n)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.membership
    }

    /// `Phi_n`: APs with a positive share of user `n`.
    pub fn cluster(&self, n: usize) -> Vec<usize> {
        (0..self.membership.nrows())
            .filter(|&m| self.membership[(m, n)] > 0.0)
            .collect()
    }

    /// `Omega_n`: users (including `n`) served by at least one AP of `Phi_n`.
    pub fn served_users(&self, n: usize) -> Vec<usize> {
        let phi = self.cluster(n);
        (0..self.membership.ncols())
            .filter(|&v| v == n || phi.iter().any(|&m| self.membership[(m, v)] > 0.0))
            .collect()
    }
}

/// Unit-norm receive beamformer over the stacked antennas of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub cluster: Vec<usize>,
    pub weights: DVector<Complex64>,
}

impl Beamformer {
    /// `|w^H g|^2` for the stacked channel of `user` over this cluster.
    pub fn gain(&self, scenario: &Scenario, user: usize) -> f64 {
        let g = stacked_channel(scenario, &self.cluster, user);
        self.weights.dotc(&g).norm_sqr()
    }
}

/// `g_v^n`: the channels of user `v` to every AP of `cluster`, stacked.
pub fn stacked_channel(scenario: &Scenario, cluster: &[usize], user: usize) -> DVector<Complex64> {
    let x = scenario.antennas();
    DVector::from_iterator(
        x * cluster.len(),
        cluster
            .iter()
            .flat_map(|&m| scenario.access_channels[m][user].iter().copied()),
    )
}

/// Zero-forcing beamformer of user `n`: its stacked channel projected onto
/// the orthogonal complement of the intra-cluster interferers, normalized.
pub fn zf_beamformer(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    n: usize,
) -> Result<Beamformer> {
    let cluster = assignment.cluster(n);
    if cluster.is_empty() {
        return Err(Error::EmptyCluster { user: n });
    }
    let g = stacked_channel(scenario, &cluster, n);
    let interferers: Vec<usize> = assignment
        .served_users(n)
        .into_iter()
        .filter(|&v| v != n)
        .collect();
    let projected = if interferers.is_empty() {
        g.clone()
    } else {
        let cols: Vec<DVector<Complex64>> = interferers
            .iter()
            .map(|&v| stacked_channel(scenario, &cluster, v))
            .collect();
        let big_g = DMatrix::from_columns(&cols);
        let pinv = big_g
            .clone()
            .pseudo_inverse(1e-12 * big_g.norm().max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Domain(e.to_string()))?;
        &g - &big_g * (pinv * &g)
    };
    let norm = projected.norm();
    if norm <= DEGENERATE_TOL * g.norm() || norm == 0.0 {
        return Err(Error::DegenerateBeamformer { user: n });
    }
    Ok(Beamformer {
        cluster,
        weights: projected / Complex64::new(norm, 0.0),
    })
}

/// Uplink SINR of user `n` under its zero-forcing beamformer; the noise is
/// integrated over `noise_bandwidth` Hz. A degenerate beamformer gives 0.
pub fn uplink_sinr(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    n: usize,
    noise_bandwidth: f64,
) -> Result<f64> {
    let w = match zf_beamformer(scenario, assignment, n) {
        Ok(w) => w,
        Err(Error::DegenerateBeamformer { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let omega = assignment.served_users(n);
    let p = scenario.config.user_tx_power;
    let signal = p * w.gain(scenario, n);
    let interference: f64 = (0..scenario.num_users())
        .filter(|v| !omega.contains(v))
        .map(|v| p * w.gain(scenario, v))
        .sum();
    let sigma2 = scenario.noise_power_per_hz * noise_bandwidth;
    Ok(signal / (interference + w.weights.norm_squared() * sigma2))
}

/// Shannon rate `b log2(1 + sinr)`.
pub fn uplink_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Noise power on the AP-to-AP links, integrated over the midpoint of the
/// configured AP bandwidth range.
pub fn backhaul_noise_power(scenario: &Scenario) -> f64 {
    scenario.noise_power_per_hz * scenario.config.ap_bandwidth_range.mid()
}

/// SINR of the backhaul link from `m1` to `m2`, every other AP interfering.
pub fn backhaul_sinr(scenario: &Scenario, m1: usize, m2: usize) -> Result<f64> {
    if m1 == m2 {
        return Err(Error::Domain(format!("backhaul SINR needs two APs, got {m1} twice")));
    }
    let h = scenario
        .backhaul_gain(m1, m2)
        .ok_or_else(|| Error::Domain(format!("no backhaul link {m1}->{m2}")))?;
    let cfg = &scenario.config;
    let interference: f64 = (0..scenario.num_aps())
        .filter(|&m| m != m1 && m != m2)
        .map(|m| {
            let hm = scenario.backhaul_gain(m, m2).expect("off-diagonal");
            cfg.ap_interference_power * hm.norm_sqr() / scenario.ap_distance_km(m, m2)
        })
        .sum();
    Ok(cfg.ap_tx_power * h.norm_sqr()
        / (scenario.ap_distance_km(m1, m2) * (interference + backhaul_noise_power(scenario))))
}

/// Mean SINR from AP `m` to every other AP.
pub fn mean_backhaul_sinr(scenario: &Scenario, m: usize) -> Result<f64> {
    let mc = scenario.num_aps();
    if mc < 2 {
        return Err(Error::Domain("mean backhaul SINR needs at least two APs".into()));
    }
    let mut sum = 0.0;
    for i in (0..mc).filter(|&i| i != m) {
        sum += backhaul_sinr(scenario, m, i)?;
    }
    Ok(sum / (mc - 1) as f64)
}

/// All pairwise backhaul SINRs and their per-AP means.
#[derive(Debug, Clone, PartialEq)]
pub struct BackhaulTable {
    sinr: DMatrix<f64>,
    mean: Vec<f64>,
}

impl BackhaulTable {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let mc = scenario.num_aps();
        let mut sinr = DMatrix::zeros(mc, mc);
        for i in 0..mc {
            for j in 0..mc {
                if i != j {
                    sinr[(i, j)] = backhaul_sinr(scenario, i, j)?;
                }
            }
        }
        let mean = (0..mc)
            .map(|m| {
                if mc < 2 {
                    0.0
                } else {
                    (0..mc).filter(|&i| i != m).map(|i| sinr[(m, i)]).sum::<f64>()
                        / (mc - 1) as f64
                }
            })
            .collect();
        Ok(BackhaulTable { sinr, mean })
    }

    /// Builds a table from explicit values (the diagonal is ignored).
    pub fn from_matrix(sinr: DMatrix<f64>) -> Self {
        let mc = sinr.nrows();
        let mean = (0..mc)
            .map(|m| {
                if mc < 2 {
                    0.0
                } else {
                    (0..mc).filter(|&i| i != m).map(|i| sinr[(m, i)]).sum::<f64>()
                        / (mc - 1) as f64
                }
            })
            .collect();
        BackhaulTable { sinr, mean }
    }

    pub fn num_aps(&self) -> usize {
        self.mean.len()
    }

    /// `phi_{m1,m2}`.
    pub fn sinr(&self, m1: usize, m2: usize) -> f64 {
        self.sinr[(m1, m2)]
    }

    /// `phi-bar` of AP `m`.
    pub fn mean(&self, m: usize) -> f64 {
        self.mean[m]
    }
}

/// Per-pair SINR coefficients `s_{m,n}` used by the optimizer and energy
/// evaluators, frozen before optimization.
///
/// The coefficient for `(m, n)` assumes AP `m` serves `n` alone (so the
/// zero-forcing beamformer reduces to matched filtering) with every other
/// user interfering, and noise integrated over an even split `B_m / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTable {
    sinr: DMatrix<f64>,
}

impl SinrTable {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let (mc, nc) = (scenario.num_aps(), scenario.num_users());
        let p = scenario.config.user_tx_power;
        let mut sinr = DMatrix::zeros(mc, nc);
        for m in 0..mc {
            let sigma2 = scenario.noise_power_per_hz * scenario.aps[m].bandwidth / nc as f64;
            for n in 0..nc {
                let w = isolated_beamformer(scenario, m, n)?;
                let signal = p * w.gain(scenario, n);
                let interference: f64 = (0..nc)
                    .filter(|&v| v != n)
                    .map(|v| p * w.gain(scenario, v))
                    .sum();
                sinr[(m, n)] = signal / (interference + sigma2);
            }
        }
        Ok(SinrTable { sinr })
    }

    pub fn from_matrix(sinr: DMatrix<f64>) -> Self {
        SinrTable { sinr }
    }

    pub fn sinr(&self, m: usize, n: usize) -> f64 {
        self.sinr[(m, n)]
    }

    /// `log2(1 + s_{m,n})`, bits/s per Hz.
    pub fn spectral_efficiency(&self, m: usize, n: usize) -> f64 {
        (1.0 + self.sinr[(m, n)]).log2()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sinr
    }
}

/// Beamformer of user `n` when AP `m` serves it alone: with no intra-cluster
/// interferers zero forcing is the matched filter.
pub fn isolated_beamformer(scenario: &Scenario, m: usize, n: usize) -> Result<Beamformer> {
    let cluster = vec![m];
    let g = stacked_channel(scenario, &cluster, n);
    let norm = g.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateBeamformer { user: n });
    }
    Ok(Beamformer {
        cluster,
        weights: g / Complex64::new(norm, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::scenario::generate_scenario;

    fn scenario(m: usize, n: usize, x: usize, seed: u64) -> Scenario {
        let cfg = SystemConfig {
            num_aps: m,
            num_users: n,
            antennas_per_ap: x,
            ..SystemConfig::default()
        };
        generate_scenario(&cfg, seed).unwrap()
    }

    // Modified Gram-Schmidt projection, independent of the pseudo-inverse path.
    fn gram_schmidt_projection(
        g: &DVector<Complex64>,
        cols: &[DVector<Complex64>],
    ) -> DVector<Complex64> {
        let mut basis: Vec<DVector<Complex64>> = Vec::new();
        for c in cols {
            let mut v = c.clone();
            for q in &basis {
                let coef = q.dotc(&v);
                v -= q * coef;
            }
            let nv = v.norm();
            if nv > 1e-14 {
                basis.push(v / Complex64::new(nv, 0.0));
            }
        }
        let mut p = g.clone();
        for q in &basis {
            let coef = q.dotc(&p);
            p -= q * coef;
        }
        p
    }

    #[test]
    fn single_user_cluster_is_matched_filter() {
        let s = scenario(2, 1, 4, 3);
        let a = ClusterAssignment::single(2, 1, 0);
        let w = zf_beamformer(&s, &a, 0).unwrap();
        let g = stacked_channel(&s, &[0], 0);
        let expected = &g / Complex64::new(g.norm(), 0.0);
        assert!((w.weights - expected).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_interferer_leaves_channel_unchanged() {
        let mut s = scenario(1, 2, 4, 5);
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1e-5, 0.0);
        s.access_channels[0][0] = vec![o, z, z, z];
        s.access_channels[0][1] = vec![z, o, z, z];
        let a = ClusterAssignment::single(1, 2, 0);
        let w = zf_beamformer(&s, &a, 0).unwrap();
        assert!((w.weights[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(w.gain(&s, 1) < 1e-24);
    }

    #[test]
    fn zf_matches_gram_schmidt_oracle() {
        let s = scenario(1, 2, 4, 11);
        let a = ClusterAssignment::single(1, 2, 0);
        for n in 0..2 {
            let w = zf_beamformer(&s, &a, n).unwrap();
            let g = stacked_channel(&s, &[0], n);
            let other = stacked_channel(&s, &[0], 1 - n);
            let p = gram_schmidt_projection(&g, &[other.clone()]);
            let oracle = &p / Complex64::new(p.norm(), 0.0);
            assert!((&w.weights - oracle).norm() < 1e-9);
            assert!((w.weights.norm() - 1.0).abs() < 1e-9);
            // Relative to the interferer's own scale.
            assert!(w.weights.dotc(&other).norm() / other.norm() < 1e-9);
        }
    }

    #[test]
    fn zf_invariants_over_random_clusters() {
        let s = scenario(3, 4, 6, 17);
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[0.5, 0.0, 1.0, 0.2, 0.5, 0.3, 0.0, 0.0, 0.0, 0.7, 0.0, 0.8],
        );
        let a = ClusterAssignment::new(a).unwrap();
        for n in 0..4 {
            let w = zf_beamformer(&s, &a, n).unwrap();
            assert!((w.weights.norm() - 1.0).abs() < 1e-9);
            for v in a.served_users(n).into_iter().filter(|&v| v != n) {
                let gv = stacked_channel(&s, &w.cluster, v);
                assert!(w.weights.dotc(&gv).norm() / gv.norm() < 1e-9, "n={n} v={v}");
            }
        }
    }

    #[test]
    fn degenerate_beamformer_reports_zero_sinr() {
        let mut s = scenario(1, 2, 4, 19);
        s.access_channels[0][1] = s.access_channels[0][0].clone();
        let a = ClusterAssignment::single(1, 2, 0);
        assert!(matches!(
            zf_beamformer(&s, &a, 0),
            Err(Error::DegenerateBeamformer { user: 0 })
        ));
        assert_eq!(uplink_sinr(&s, &a, 0, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn sinr_without_interference_is_snr() {
        let s = scenario(1, 1, 4, 23);
        let a = ClusterAssignment::single(1, 1, 0);
        let g = stacked_channel(&s, &[0], 0);
        let sigma2 = s.noise_power_per_hz * 1e6;
        let expected = s.config.user_tx_power * g.norm_squared() / sigma2;
        let got = uplink_sinr(&s, &a, 0, 1e6).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
        let halved = uplink_sinr(&s, &a, 0, 2e6).unwrap();
        assert!((halved * 2.0 / got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_transmit_power_gives_zero_sinr() {
        let mut s = scenario(2, 2, 4, 29);
        s.config.user_tx_power = 0.0;
        let a = ClusterAssignment::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]))
            .unwrap();
        assert_eq!(uplink_sinr(&s, &a, 0, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn inter_cluster_interferer_matches_scalar_evaluation() {
        let s = scenario(2, 2, 4, 31);
        let a = ClusterAssignment::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]))
            .unwrap();
        // User 0 alone at AP 0, user 1 interferes from outside the cluster.
        let g0 = &s.access_channels[0][0];
        let g1 = &s.access_channels[0][1];
        let norm: f64 = g0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut sig = Complex64::new(0.0, 0.0);
        let mut intf = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            sig += g0[k].conj() / norm * g0[k];
            intf += g0[k].conj() / norm * g1[k];
        }
        let p = s.config.user_tx_power;
        let sigma2 = s.noise_power_per_hz * 2e6;
        let expected = p * sig.norm_sqr() / (p * intf.norm_sqr() + sigma2);
        let got = uplink_sinr(&s, &a, 0, 2e6).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uplink_rate_examples() {
        assert_eq!(uplink_rate(0.0, 5.0), 0.0);
        assert_eq!(uplink_rate(1e6, 1.0), 1e6);
        assert_eq!(uplink_rate(5e6, 3.0), 1e7);
    }

    #[test]
    fn backhaul_two_aps_has_no_interference() {
        let s = scenario(2, 1, 2, 37);
        let h = s.backhaul_gain(0, 1).unwrap();
        let expected = s.config.ap_tx_power * h.norm_sqr()
            / (s.ap_distance_km(0, 1) * backhaul_noise_power(&s));
        assert!((backhaul_sinr(&s, 0, 1).unwrap() / expected - 1.0).abs() < 1e-12);
        assert_eq!(
            mean_backhaul_sinr(&s, 0).unwrap(),
            backhaul_sinr(&s, 0, 1).unwrap()
        );
    }

    #[test]
    fn silent_interferers_reduce_to_pair_value() {
        let mut s = scenario(4, 1, 2, 41);
        s.config.ap_interference_power = 0.0;
        let h = s.backhaul_gain(2, 3).unwrap();
        let expected = s.config.ap_tx_power * h.norm_sqr()
            / (s.ap_distance_km(2, 3) * backhaul_noise_power(&s));
        assert!((backhaul_sinr(&s, 2, 3).unwrap() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backhaul_four_aps_matches_term_by_term() {
        let s = scenario(4, 1, 2, 43);
        let cfg = &s.config;
        let d = |i: usize, j: usize| s.ap_distance_km(i, j);
        let h2 = |i: usize, j: usize| s.backhaul_gain(i, j).unwrap().norm_sqr();
        let interference = cfg.ap_interference_power * h2(1, 3) / d(1, 3)
            + cfg.ap_interference_power * h2(2, 3) / d(2, 3);
        let expected =
            cfg.ap_tx_power * h2(0, 3) / (d(0, 3) * (interference + backhaul_noise_power(&s)));
        assert!((backhaul_sinr(&s, 0, 3).unwrap() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_backhaul_averages_pairs() {
        let s = scenario(5, 1, 2, 47);
        let table = BackhaulTable::from_scenario(&s).unwrap();
        for m in 0..5 {
            let mean: f64 = (0..5)
                .filter(|&i| i != m)
                .map(|i| backhaul_sinr(&s, m, i).unwrap())
                .sum::<f64>()
                / 4.0;
            assert!((mean_backhaul_sinr(&s, m).unwrap() / mean - 1.0).abs() < 1e-12);
            assert!((table.mean(m) / mean - 1.0).abs() < 1e-12);
        }
        let flat = BackhaulTable::from_matrix(DMatrix::from_element(3, 3, 2.5));
        assert_eq!(flat.mean(1), 2.5);
    }

    #[test]
    fn coefficient_table_uses_matched_filter_with_all_users_interfering() {
        let s = scenario(2, 3, 4, 53);
        let table = SinrTable::from_scenario(&s).unwrap();
        let p = s.config.user_tx_power;
        let g = |n: usize| stacked_channel(&s, &[1], n);
        let w = g(2) / Complex64::new(g(2).norm(), 0.0);
        let sig = p * w.dotc(&g(2)).norm_sqr();
        let intf = p * (w.dotc(&g(0)).norm_sqr() + w.dotc(&g(1)).norm_sqr());
        let sigma2 = s.noise_power_per_hz * s.aps[1].bandwidth / 3.0;
        assert!((table.sinr(1, 2) / (sig / (intf + sigma2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assignment_rejects_bad_columns() {
        assert!(ClusterAssignment::new(DMatrix::from_row_slice(2, 1, &[0.5, 0.6])).is_err());
        assert!(ClusterAssignment::new(DMatrix::from_row_slice(2, 1, &[1.5, -0.5])).is_err());
    }
}
