//! Reproducible network instances: topology, resources, tasks and channels.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{Range, SystemConfig};
use crate::error::{Error, Result};

/// Distances below this (meters) are clamped before path-loss evaluation.
pub const MIN_DISTANCE_M: f64 = 1.0;

// One independent ChaCha stream per entity category, so growing the user
// population never perturbs the AP draws (and vice versa).
const STREAM_AP_POSITIONS: u64 = 1;
const STREAM_AP_RESOURCES: u64 = 2;
const STREAM_USER_POSITIONS: u64 = 3;
const STREAM_USER_TASKS: u64 = 4;
const STREAM_ACCESS: u64 = 5;
const STREAM_BACKHAUL: u64 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ApProfile {
    pub id: usize,
    /// Position in meters.
    pub position: [f64; 2],
    /// `B_m`, Hz.
    pub bandwidth: f64,
    /// `C_m`, cycles/s.
    pub compute: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTask {
    pub id: usize,
    pub position: [f64; 2],
    /// `L_n`, bits.
    pub task_bits: f64,
    /// `rho_n`, cycles/bit.
    pub density: f64,
    /// `D_n^t`, seconds.
    pub deadline: f64,
}

impl UserTask {
    /// Total CPU cycles of the task, `L_n * rho_n`.
    pub fn cycles(&self) -> f64 {
        self.task_bits * self.density
    }
}

/// A frozen network instance. Immutable once generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub seed: u64,
    pub aps: Vec<ApProfile>,
    pub users: Vec<UserTask>,
    /// `g_{m,n}`, indexed `[m][n]`, each of length `X`.
    pub access_channels: Vec<Vec<Vec<Complex64>>>,
    /// `h_{m1,m2}`, row-major `M x M`; the diagonal is `None`.
    backhaul: Vec<Option<Complex64>>,
    /// Noise power spectral density, W/Hz.
    pub noise_power_per_hz: f64,
}

/// Path loss `128.1 + 37.6 log10(d)` dB with `d` in kilometers.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {distance_km} km"
        )));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Noise power in watts over `bandwidth` Hz for a PSD given in dBm/Hz.
pub fn noise_power(noise_psd_dbm_hz: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!(
            "noise bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(dbm_hz_to_w_hz(noise_psd_dbm_hz) * bandwidth)
}

fn dbm_hz_to_w_hz(psd: f64) -> f64 {
    10f64.powf((psd - 30.0) / 10.0)
}

fn distance_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut impl Rng, r: Range) -> f64 {
    if r.hi == r.lo {
        r.lo
    } else {
        rng.random_range(r.lo..=r.hi)
    }
}

fn point_in_disk(rng: &mut impl Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

/// Circularly-symmetric standard complex Gaussian, `CN(0, 1)`.
fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Builds a network instance. A pure function of `(config, seed)`.
pub fn generate_scenario(config: &SystemConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let m_count = config.num_aps;
    let n_count = config.num_users;
    let x = config.antennas_per_ap;

    let mut rng = stream(seed, STREAM_AP_POSITIONS);
    let ap_pos: Vec<[f64; 2]> = (0..m_count)
        .map(|_| point_in_disk(&mut rng, config.deployment_radius))
        .collect();
    let mut rng = stream(seed, STREAM_AP_RESOURCES);
    let aps: Vec<ApProfile> = ap_pos
        .into_iter()
        .enumerate()
        .map(|(id, position)| ApProfile {
            id,
            position,
            bandwidth: uniform(&mut rng, config.ap_bandwidth_range),
            compute: uniform(&mut rng, config.ap_compute_range),
        })
        .collect();

    let mut rng = stream(seed, STREAM_USER_POSITIONS);
    let user_pos: Vec<[f64; 2]> = (0..n_count)
        .map(|_| point_in_disk(&mut rng, config.deployment_radius))
        .collect();
    let mut rng = stream(seed, STREAM_USER_TASKS);
    let users: Vec<UserTask> = user_pos
        .into_iter()
        .enumerate()
        .map(|(id, position)| UserTask {
            id,
            position,
            task_bits: uniform(&mut rng, config.task_size_range),
            density: uniform(&mut rng, config.compute_density_range),
            deadline: uniform(&mut rng, config.delay_tolerance_range),
        })
        .collect();

    let mut rng = stream(seed, STREAM_ACCESS);
    let mut access_channels = Vec::with_capacity(m_count);
    for ap in &aps {
        let mut row = Vec::with_capacity(n_count);
        for user in &users {
            let d_km = distance_m(ap.position, user.position).max(MIN_DISTANCE_M) / 1e3;
            let amplitude = 10f64.powf(-path_loss_db(d_km)? / 20.0);
            row.push(
                (0..x)
                    .map(|_| complex_gaussian(&mut rng) * amplitude)
                    .collect::<Vec<_>>(),
            );
        }
        access_channels.push(row);
    }

    // Reciprocal backhaul: one draw per unordered pair, h = h~ / sqrt(d^gamma), d in km.
    let mut rng = stream(seed, STREAM_BACKHAUL);
    let mut backhaul = vec![None; m_count * m_count];
    for i in 0..m_count {
        for j in (i + 1)..m_count {
            let d_km = distance_m(aps[i].position, aps[j].position).max(MIN_DISTANCE_M) / 1e3;
            let h = complex_gaussian(&mut rng) / d_km.powf(config.path_loss_exponent).sqrt();
            backhaul[i * m_count + j] = Some(h);
            backhaul[j * m_count + i] = Some(h);
        }
    }

    Ok(Scenario {
        config: config.clone(),
        seed,
        aps,
        users,
        access_channels,
        backhaul,
        noise_power_per_hz: dbm_hz_to_w_hz(config.noise_psd),
    })
}

impl Scenario {
    pub fn num_aps(&self) -> usize {
        self.aps.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas_per_ap
    }

    /// Backhaul gain between two distinct APs; `None` on the diagonal.
    pub fn backhaul_gain(&self, m1: usize, m2: usize) -> Option<Complex64> {
        self.backhaul[m1 * self.num_aps() + m2]
    }

    /// AP-to-AP distance in kilometers, clamped like the path-loss input.
    pub fn ap_distance_km(&self, m1: usize, m2: usize) -> f64 {
        distance_m(self.aps[m1].position, self.aps[m2].position).max(MIN_DISTANCE_M) / 1e3
    }

    pub fn access_distance_km(&self, m: usize, n: usize) -> f64 {
        distance_m(self.aps[m].position, self.users[n].position).max(MIN_DISTANCE_M) / 1e3
    }

    /// Smallest of all AP bandwidths and compute capacities, in native units.
    pub fn min_resource(&self) -> f64 {
        self.aps
            .iter()
            .flat_map(|ap| [ap.bandwidth, ap.compute])
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes the instance as a line-oriented CSV dump.
    ///
    /// Record types, one per line, first column is the tag:
    ///
    /// ```text
    /// cfg,<field>,<toml value>
    /// seed,<u64>
    /// noise,<W/Hz>
    /// ap,<id>,<x_m>,<y_m>,<bandwidth_hz>,<compute_cps>
    /// user,<id>,<x_m>,<y_m>,<task_bits>,<density>,<deadline_s>
    /// g,<m>,<n>,<antenna>,<re>,<im>
    /// h,<m1>,<m2>,<re>,<im>
    /// ```
    ///
    /// Floats use the shortest round-trip representation, so
    /// [`Scenario::from_csv`] reproduces the instance bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# ucmec scenario v1\n");
        let table = toml::Table::try_from(&self.config).expect("config serializes");
        for (key, value) in &table {
            let _ = writeln!(out, "cfg,{key},{value}");
        }
        let _ = writeln!(out, "seed,{}", self.seed);
        let _ = writeln!(out, "noise,{}", self.noise_power_per_hz);
        for ap in &self.aps {
            let _ = writeln!(
                out,
                "ap,{},{},{},{},{}",
                ap.id, ap.position[0], ap.position[1], ap.bandwidth, ap.compute
            );
        }
        for u in &self.users {
            let _ = writeln!(
                out,
                "user,{},{},{},{},{},{}",
                u.id, u.position[0], u.position[1], u.task_bits, u.density, u.deadline
            );
        }
        for (m, row) in self.access_channels.iter().enumerate() {
            for (n, g) in row.iter().enumerate() {
                for (k, z) in g.iter().enumerate() {
                    let _ = writeln!(out, "g,{m},{n},{k},{},{}", z.re, z.im);
                }
            }
        }
        let mc = self.num_aps();
        for i in 0..mc {
            for j in 0..mc {
                if let Some(h) = self.backhaul_gain(i, j) {
                    let _ = writeln!(out, "h,{i},{j},{},{}", h.re, h.im);
                }
            }
        }
        out
    }

    /// Parses a dump produced by [`Scenario::to_csv`].
    pub fn from_csv(text: &str) -> Result<Scenario> {
        fn num<T: std::str::FromStr>(field: Option<&str>, line: usize) -> Result<T> {
            field
                .ok_or_else(|| Error::Parse(format!("line {line}: missing field")))?
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad number")))
        }

        let mut cfg_toml = String::new();
        let mut seed = 0u64;
        let mut noise = None;
        let mut aps = Vec::new();
        let mut users = Vec::new();
        let mut g_entries = Vec::new();
        let mut h_entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (tag, rest) = raw.split_once(',').unwrap_or((raw, ""));
            if tag == "cfg" {
                let (key, value) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("line {line}: bad cfg record")))?;
                let _ = writeln!(cfg_toml, "{key} = {value}");
                continue;
            }
            let mut f = rest.split(',');
            match tag {
                "seed" => seed = num(f.next(), line)?,
                "noise" => noise = Some(num::<f64>(f.next(), line)?),
                "ap" => aps.push(ApProfile {
                    id: num(f.next(), line)?,
                    position: [num(f.next(), line)?, num(f.next(), line)?],
                    bandwidth: num(f.next(), line)?,
                    compute: num(f.next(), line)?,
                }),
                "user" => users.push(UserTask {
                    id: num(f.next(), line)?,
                    position: [num(f.next(), line)?, num(f.next(), line)?],
                    task_bits: num(f.next(), line)?,
                    density: num(f.next(), line)?,
                    deadline: num(f.next(), line)?,
                }),
                "g" => g_entries.push((
                    num::<usize>(f.next(), line)?,
                    num::<usize>(f.next(), line)?,
                    num::<usize>(f.next(), line)?,
                    Complex64::new(num(f.next(), line)?, num(f.next(), line)?),
                )),
                "h" => h_entries.push((
                    num::<usize>(f.next(), line)?,
                    num::<usize>(f.next(), line)?,
                    Complex64::new(num(f.next(), line)?, num(f.next(), line)?),
                )),
                other => return Err(Error::Parse(format!("line {line}: unknown record `{other}`"))),
            }
        }
        let config: SystemConfig =
            toml::from_str(&cfg_toml).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        let (mc, nc, x) = (config.num_aps, config.num_users, config.antennas_per_ap);
        if aps.len() != mc || users.len() != nc {
            return Err(Error::Parse(format!(
                "expected {mc} APs and {nc} users, found {} and {}",
                aps.len(),
                users.len()
            )));
        }
        let mut access_channels = vec![vec![vec![Complex64::new(0.0, 0.0); x]; nc]; mc];
        for (m, n, k, z) in g_entries {
            if m >= mc || n >= nc || k >= x {
                return Err(Error::Parse(format!("channel index ({m},{n},{k}) out of range")));
            }
            access_channels[m][n][k] = z;
        }
        let mut backhaul = vec![None; mc * mc];
        for (i, j, h) in h_entries {
            if i >= mc || j >= mc || i == j {
                return Err(Error::Parse(format!("bad backhaul index ({i},{j})")));
            }
            backhaul[i * mc + j] = Some(h);
        }
        Ok(Scenario {
            noise_power_per_hz: noise.unwrap_or_else(|| dbm_hz_to_w_hz(config.noise_psd)),
            config,
            seed,
            aps,
            users,
            access_channels,
            backhaul,
        })
    }

    /// Same instance with the block size replaced; channels and draws are untouched.
    pub fn with_block_size(&self, block_size: f64) -> Scenario {
        let mut s = self.clone();
        s.config.block_size = block_size;
        s
    }
}
