//! Brute-force re-evaluation of every delay and energy term, written
//! against plain vectors so it shares no code with the library's evaluator.
#![allow(dead_code)]

use ucmec::scenario::Scenario;

pub type Grid = Vec<Vec<f64>>;

pub fn zeros(m: usize, n: usize) -> Grid {
    vec![vec![0.0; n]; m]
}

pub fn rel_err(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / x.abs().max(y.abs())
    }
}

/// Uplink SINR when AP `m` serves user `n` alone with a matched filter and
/// every other user interferes; noise over `B_m / N`.
pub fn isolated_sinr(s: &Scenario) -> Grid {
    let (mc, nc) = (s.aps.len(), s.users.len());
    let p = s.config.user_tx_power;
    let mut out = zeros(mc, nc);
    for m in 0..mc {
        let noise = s.noise_power_per_hz * s.aps[m].bandwidth / nc as f64;
        for n in 0..nc {
            let g = &s.access_channels[m][n];
            let norm2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
            let mut interference = 0.0;
            for v in (0..nc).filter(|&v| v != n) {
                let h = &s.access_channels[m][v];
                let mut dot = num_complex::Complex64::new(0.0, 0.0);
                for k in 0..g.len() {
                    dot += g[k].conj() * h[k];
                }
                interference += p * dot.norm_sqr() / norm2;
            }
            out[m][n] = p * norm2 / (interference + noise);
        }
    }
    out
}

fn ap_km(s: &Scenario, i: usize, j: usize) -> f64 {
    let (a, b) = (s.aps[i].position, s.aps[j].position);
    ((a[0] - b[0]).hypot(a[1] - b[1]) / 1000.0).max(1e-3)
}

/// Backhaul SINR between every AP pair, noise over the middle of the AP
/// bandwidth range. The diagonal is unused.
pub fn backhaul_sinr(s: &Scenario) -> Grid {
    let mc = s.aps.len();
    let cfg = &s.config;
    let noise = s.noise_power_per_hz * 0.5 * (cfg.ap_bandwidth_range.lo + cfg.ap_bandwidth_range.hi);
    let mut out = zeros(mc, mc);
    for i in 0..mc {
        for j in (0..mc).filter(|&j| j != i) {
            let mut interference = 0.0;
            for k in (0..mc).filter(|&k| k != i && k != j) {
                interference += cfg.ap_interference_power * s.backhaul_gain(k, j).unwrap().norm_sqr() / ap_km(s, k, j);
            }
            out[i][j] = cfg.ap_tx_power * s.backhaul_gain(i, j).unwrap().norm_sqr() / (ap_km(s, i, j) * (interference + noise));
        }
    }
    out
}

/// Every term of one decision.
#[derive(Debug, Clone)]
pub struct Brute {
    pub du: Grid,
    pub de: Grid,
    pub eu: Grid,
    pub ee: Grid,
    pub eo_ap: Vec<f64>,
    pub eo_user: Vec<f64>,
    pub do_user: Vec<f64>,
    pub c_bar: Vec<f64>,
    pub b_bar: Vec<f64>,
    pub reputation: Vec<f64>,
    pub p_leader: Vec<f64>,
    pub bs: Vec<f64>,
    pub bb: Vec<f64>,
    pub e_ls: Vec<f64>,
    pub e_lb: Vec<f64>,
    pub e_lt: Vec<f64>,
    pub d_lg: Vec<f64>,
    pub e_lg: Vec<f64>,
    pub d_fs: Vec<f64>,
    pub e_ft: Vec<f64>,
    pub e_c: Vec<f64>,
    pub e_a: f64,
    pub d_o: f64,
    pub d_c: f64,
}

/// Evaluates `(a, b, c)` from scratch. `p_override` replaces the leader
/// probabilities when given.
pub fn brute(s: &Scenario, a: &Grid, b: &Grid, c: &Grid, p_override: Option<&[f64]>) -> Brute {
    let (mc, nc) = (s.aps.len(), s.users.len());
    let cfg = &s.config;
    let up = isolated_sinr(s);
    let phi = backhaul_sinr(s);
    let (eps_c, eps_p) = (cfg.epsilon_c, cfg.epsilon_p);
    let (ls, lb, di) = (cfg.state_msg_size, cfg.block_size, cfg.block_interval as f64);

    let mut du = zeros(mc, nc);
    let mut de = zeros(mc, nc);
    let mut eu = zeros(mc, nc);
    let mut ee = zeros(mc, nc);
    for m in 0..mc {
        for n in 0..nc {
            if a[m][n] > 0.0 {
                let u = &s.users[n];
                let r = b[m][n] * (1.0 + up[m][n]).log2();
                du[m][n] = a[m][n] * u.task_bits / r;
                de[m][n] = a[m][n] * u.task_bits * u.density / c[m][n];
                eu[m][n] = eps_c * du[m][n];
                ee[m][n] = eps_p * de[m][n];
            }
        }
    }
    let eo_ap: Vec<f64> = (0..mc).map(|m| (0..nc).map(|n| ee[m][n]).sum()).collect();
    let eo_user: Vec<f64> = (0..nc).map(|n| (0..mc).map(|m| eu[m][n]).sum()).collect();
    let do_user: Vec<f64> = (0..nc)
        .map(|n| {
            (0..mc)
                .filter(|&m| a[m][n] > 0.0)
                .map(|m| du[m][n] + de[m][n])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let c_bar: Vec<f64> = (0..mc).map(|m| s.aps[m].compute - c[m].iter().sum::<f64>()).collect();
    let b_bar: Vec<f64> = (0..mc).map(|m| s.aps[m].bandwidth - b[m].iter().sum::<f64>()).collect();
    let reputation: Vec<f64> = (0..mc).map(|m| c_bar[m] / lb + b_bar[m] / (ls + lb)).collect();
    let r_max = reputation.iter().cloned().fold(0.0, f64::max);
    let p_leader: Vec<f64> = match p_override {
        Some(p) => p.to_vec(),
        None => reputation.iter().map(|r| r / r_max).collect(),
    };
    // L^s / B^s = L^b / B^b with B^s + B^b = B-bar.
    let bs: Vec<f64> = b_bar.iter().map(|x| x * ls / (ls + lb)).collect();
    let bb: Vec<f64> = b_bar.iter().map(|x| x * lb / (ls + lb)).collect();
    let phi_bar: Vec<f64> = (0..mc)
        .map(|m| (0..mc).filter(|&i| i != m).map(|i| phi[m][i]).sum::<f64>() / (mc - 1) as f64)
        .collect();
    let f = (mc - 1) as f64;
    let mut e_ls = vec![0.0; mc];
    let mut e_lb = vec![0.0; mc];
    for m in 0..mc {
        for i in (0..mc).filter(|&i| i != m) {
            let se = (1.0 + phi[m][i]).log2();
            e_ls[m] += eps_c * (2.0 + di) * f * ls / (bs[m] / (2.0 + di) * se);
            e_lb[m] += eps_c * f * lb / (bb[m] / f * se);
        }
    }
    let e_lt: Vec<f64> = (0..mc).map(|m| e_ls[m] + e_lb[m]).collect();
    let d_lg: Vec<f64> = (0..mc).map(|m| lb / c_bar[m]).collect();
    let e_lg: Vec<f64> = d_lg.iter().map(|d| eps_p * d).collect();
    let d_fs: Vec<f64> = (0..mc)
        .map(|m| ls * (di + 2.0) / (b_bar[m] / (di + 2.0) * (1.0 + phi_bar[m]).log2()))
        .collect();
    let e_ft: Vec<f64> = d_fs.iter().map(|d| eps_c * d).collect();
    let e_c: Vec<f64> = (0..mc)
        .map(|m| (e_lg[m] + e_lt[m]) * p_leader[m] + e_ft[m] * (1.0 - p_leader[m]))
        .collect();
    let e_a = (0..mc).map(|m| eo_ap[m] + e_c[m]).sum::<f64>() + eo_user.iter().sum::<f64>();
    let d_o = do_user.iter().sum::<f64>() / nc as f64;

    let mut d_c = 0.0_f64;
    for m in 0..mc {
        let (mut t1, mut t2, mut t3) = (0.0_f64, 0.0_f64, 0.0_f64);
        for j in (0..mc).filter(|&j| j != m) {
            let se = (1.0 + phi[m][j]).log2();
            t1 = t1.max(f * ls * (di + 2.0).powi(2) / (bs[m] * se));
            t2 = t2.max((di + 2.0).powi(2) * ls / (b_bar[j] * (1.0 + phi_bar[j]).log2()));
            t3 = t3.max(f * lb / (bb[m] * se));
        }
        d_c = d_c.max(t1 + t2 + t3 + d_lg[m]);
    }

    Brute {
        du,
        de,
        eu,
        ee,
        eo_ap,
        eo_user,
        do_user,
        c_bar,
        b_bar,
        reputation,
        p_leader,
        bs,
        bb,
        e_ls,
        e_lb,
        e_lt,
        d_lg,
        e_lg,
        d_fs,
        e_ft,
        e_c,
        e_a,
        d_o,
        d_c,
    }
}

/// A mixed allocation touching every pair: user `n` leans toward AP `n mod M`,
/// and each AP spends about 60% of its resources.
pub fn mixed_allocation(s: &Scenario) -> (Grid, Grid, Grid) {
    let (mc, nc) = (s.aps.len(), s.users.len());
    let mut a = zeros(mc, nc);
    for n in 0..nc {
        let w: Vec<f64> = (0..mc).map(|m| if m == n % mc { 3.0 } else { 1.0 + 0.1 * m as f64 }).collect();
        let sum: f64 = w.iter().sum();
        for m in 0..mc {
            a[m][n] = w[m] / sum;
        }
    }
    let mut b = zeros(mc, nc);
    let mut c = zeros(mc, nc);
    for m in 0..mc {
        for n in 0..nc {
            let share = 0.6 * (1.0 + 0.5 * a[m][n]) / (nc as f64 * 1.25);
            b[m][n] = s.aps[m].bandwidth * share;
            c[m][n] = s.aps[m].compute * share;
        }
    }
    (a, b, c)
}

pub fn to_matrix(g: &Grid) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(g.len(), g[0].len(), |i, j| g[i][j])
}

pub fn from_matrix(x: &nalgebra::DMatrix<f64>) -> Grid {
    (0..x.nrows()).map(|i| (0..x.ncols()).map(|j| x[(i, j)]).collect()).collect()
}
