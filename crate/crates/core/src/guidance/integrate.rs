//! Trajectory integration over a time-ordered series of snapshots.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::velocity::{VectorPotentialSpec, VelocityGrid};
use crate::configspace::field::{ParticleSpec, NODE_EPS};
use crate::configspace::grid::{Boundary, GridSpec};
use crate::configspace::local::Guiding;
use crate::error::{Error, Result};

/// Velocity fields of consecutive snapshots, linearly interpolated in time.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    frames: Vec<VelocityGrid>,
    a: VectorPotentialSpec,
}

impl SnapshotSeries {
    pub fn new<G: Guiding>(snapshots: &[G], a: VectorPotentialSpec) -> Result<Self> {
        Self::with_eps(snapshots, a, NODE_EPS)
    }

    pub fn with_eps<G: Guiding>(snapshots: &[G], a: VectorPotentialSpec, eps: f64) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Incompatible("no snapshots".into()));
        }
        let frames: Vec<VelocityGrid> = snapshots.iter().map(|s| VelocityGrid::new(s, eps)).collect();
        if frames.windows(2).any(|w| !(w[1].time() > w[0].time()) || w[1].grid() != w[0].grid()) {
            return Err(Error::Incompatible("snapshots must share a grid and have increasing times".into()));
        }
        Ok(SnapshotSeries { frames, a })
    }

    pub fn grid(&self) -> &GridSpec {
        self.frames[0].grid()
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        self.frames[0].particles()
    }

    pub fn start_time(&self) -> f64 {
        self.frames[0].time()
    }

    pub fn end_time(&self) -> f64 {
        self.frames.last().expect("non-empty").time()
    }

    /// Velocity at `(x, t)`; `osmotic_scale` as in [`VelocityGrid::velocity`].
    pub fn velocity(&self, x: &[f64], t: f64, osmotic_scale: f64) -> Result<Vec<f64>> {
        let n = x.len();
        let mut out = vec![0.0; n];
        let f = &self.frames;
        let i = f.partition_point(|s| s.time() <= t).saturating_sub(1).min(f.len() - 1);
        if i + 1 == f.len() || t <= f[i].time() {
            f[i].velocity(x, osmotic_scale, &mut out)?;
        } else {
            let w = (t - f[i].time()) / (f[i + 1].time() - f[i].time());
            let mut next = vec![0.0; n];
            f[i].velocity(x, osmotic_scale, &mut out)?;
            f[i + 1].velocity(x, osmotic_scale, &mut next)?;
            for (o, b) in out.iter_mut().zip(&next) {
                *o = (1.0 - w) * *o + w * b;
            }
        }
        self.a.add_to(self.grid(), self.particles(), x, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Bohm,
    Nelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryFlag {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "NODE_HALT")]
    NodeHalt,
    #[serde(rename = "LEFT_DOMAIN")]
    LeftDomain,
}

impl TrajectoryFlag {
    pub fn label(self) -> &'static str {
        match self {
            TrajectoryFlag::Ok => "OK",
            TrajectoryFlag::NodeHalt => "NODE_HALT",
            TrajectoryFlag::LeftDomain => "LEFT_DOMAIN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub dt: f64,
    /// Record every `record_every`-th step (the first and last are always kept).
    pub record_every: usize,
    pub scheme: Scheme,
}

impl IntegrationOptions {
    pub fn new(dt: f64) -> Self {
        IntegrationOptions { dt, record_every: 1, scheme: Scheme::Rk4 }
    }
}

/// Nelson parameters. `diffusion_scale` multiplies both the osmotic drift
/// and the noise amplitude, so 0 reproduces Euler-integrated Bohm motion
/// (the `hbar -> 0` limit at fixed `S`). `drift = false` drops the drift
/// entirely (pure diffusion control).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelsonParams {
    pub seed: u64,
    pub dt: f64,
    #[serde(default = "one")]
    pub diffusion_scale: f64,
    #[serde(default = "yes")]
    pub drift: bool,
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn one_usize() -> usize {
    1
}

impl NelsonParams {
    pub fn new(seed: u64, dt: f64) -> Self {
        NelsonParams { seed, dt, diffusion_scale: 1.0, drift: true, record_every: 1 }
    }
}

/// Recorded trajectories. `positions[j]` holds one configuration per
/// recorded time up to the trajectory's halt (so it may be shorter than
/// `times`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub kind: EnsembleKind,
    pub seed: Option<u64>,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vec<f64>>>,
    pub flags: Vec<TrajectoryFlag>,
    /// Periodic wraps per trajectory.
    pub wraps: Vec<usize>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn halted(&self) -> usize {
        self.flags.iter().filter(|f| **f != TrajectoryFlag::Ok).count()
    }

    /// Final positions of trajectories that reached the last time.
    pub fn final_positions(&self) -> Vec<&[f64]> {
        self.positions
            .iter()
            .zip(&self.flags)
            .filter(|(p, f)| **f == TrajectoryFlag::Ok && p.len() == self.times.len())
            .map(|(p, _)| p.last().expect("recorded").as_slice())
            .collect()
    }

    /// Positions at recorded time index `i` for trajectories still alive.
    pub fn positions_at(&self, i: usize) -> Vec<&[f64]> {
        self.positions.iter().filter_map(|p| p.get(i).map(|x| x.as_slice())).collect()
    }

    /// Writes `t,traj_id,flag,x1_1,...` rows in time-major order. A halted
    /// trajectory's last row carries its flag.
    pub fn write_csv<W: Write>(&self, mut w: W, n_particles: usize, dim: usize) -> Result<()> {
        let mut header = String::from("t,traj_id,flag");
        for i in 1..=n_particles {
            for d in 1..=dim {
                header.push_str(&format!(",x{i}_{d}"));
            }
        }
        writeln!(w, "{header}")?;
        for (ti, t) in self.times.iter().enumerate() {
            for (j, p) in self.positions.iter().enumerate() {
                let Some(x) = p.get(ti) else { continue };
                let flag = if ti + 1 == p.len() { self.flags[j] } else { TrajectoryFlag::Ok };
                write!(w, "{t},{j},{}", flag.label())?;
                for v in x {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

enum Stop {
    Node,
    Left,
}

fn classify(e: &Error) -> Stop {
    match e {
        Error::OutsideExtent => Stop::Left,
        _ => Stop::Node,
    }
}

/// Maps a point back into the periodic box, counting wraps; `None` when the
/// grid has hard walls and the point is outside.
fn wrap_into(grid: &GridSpec, x: &mut [f64]) -> Option<usize> {
    let mut wraps = 0;
    for (a, v) in x.iter_mut().enumerate() {
        let l = grid.extent[a];
        if *v >= -l && *v < l {
            continue;
        }
        if matches!(grid.boundary, Boundary::HardWall { .. }) {
            return None;
        }
        *v = (*v + l).rem_euclid(2.0 * l) - l;
        wraps += 1;
    }
    Some(wraps)
}

struct Track {
    positions: Vec<Vec<f64>>,
    flag: TrajectoryFlag,
    wraps: usize,
}

fn time_grid(series: &SnapshotSeries, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::Config("integration dt must be positive".into()));
    }
    let span = series.end_time() - series.start_time();
    Ok((span / dt).round().max(0.0) as usize)
}

fn recorded_times(t0: f64, dt: f64, steps: usize, every: usize) -> Vec<f64> {
    (0..=steps).filter(|s| s % every == 0 || *s == steps).map(|s| t0 + s as f64 * dt).collect()
}

/// Deterministic Bohm trajectories. Each trajectory stops with a flag when
/// a velocity evaluation touches the node set or leaves a hard-walled grid.
pub fn integrate_bohm(series: &SnapshotSeries, starts: &[Vec<f64>], opts: IntegrationOptions) -> Result<TrajectoryEnsemble> {
    let steps = time_grid(series, opts.dt)?;
    let every = opts.record_every.max(1);
    let (t0, dt) = (series.start_time(), opts.dt);
    let n = series.grid().n_axes();
    if starts.iter().any(|s| s.len() != n) {
        return Err(Error::Incompatible("start configuration has wrong dimension".into()));
    }
    let tracks: Vec<Track> = starts
        .par_iter()
        .map(|start| {
            let mut x = start.clone();
            let mut track = Track { positions: vec![x.clone()], flag: TrajectoryFlag::Ok, wraps: 0 };
            for s in 0..steps {
                let t = t0 + s as f64 * dt;
                let advanced = match opts.scheme {
                    Scheme::Euler => series.velocity(&x, t, 0.0).map(|v| axpy(&x, dt, &v)),
                    Scheme::Rk4 => rk4(series, &x, t, dt),
                };
                match advanced {
                    Ok(mut next) => match wrap_into(series.grid(), &mut next) {
                        Some(w) => {
                            track.wraps += w;
                            x = next;
                        }
                        None => {
                            track.flag = TrajectoryFlag::LeftDomain;
                            break;
                        }
                    },
                    Err(e) => {
                        track.flag = match classify(&e) {
                            Stop::Node => TrajectoryFlag::NodeHalt,
                            Stop::Left => TrajectoryFlag::LeftDomain,
                        };
                        break;
                    }
                }
                if (s + 1) % every == 0 || s + 1 == steps {
                    track.positions.push(x.clone());
                }
            }
            track
        })
        .collect();
    Ok(assemble(EnsembleKind::Bohm, None, recorded_times(t0, dt, steps, every), tracks))
}

fn axpy(x: &[f64], h: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + h * b).collect()
}

fn rk4(series: &SnapshotSeries, x: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    // intermediate stages may cross the periodic seam
    let eval = |p: Vec<f64>, t: f64| {
        let mut p = p;
        wrap_into(series.grid(), &mut p).ok_or(Error::OutsideExtent)?;
        series.velocity(&p, t, 0.0)
    };
    let k1 = series.velocity(x, t, 0.0)?;
    let k2 = eval(axpy(x, dt / 2.0, &k1), t + dt / 2.0)?;
    let k3 = eval(axpy(x, dt / 2.0, &k2), t + dt / 2.0)?;
    let k4 = eval(axpy(x, dt, &k3), t + dt)?;
    Ok((0..x.len()).map(|a| x[a] + dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])).collect())
}

fn assemble(kind: EnsembleKind, seed: Option<u64>, times: Vec<f64>, tracks: Vec<Track>) -> TrajectoryEnsemble {
    let mut positions = Vec::with_capacity(tracks.len());
    let mut flags = Vec::with_capacity(tracks.len());
    let mut wraps = Vec::with_capacity(tracks.len());
    for t in tracks {
        positions.push(t.positions);
        flags.push(t.flag);
        wraps.push(t.wraps);
    }
    TrajectoryEnsemble { kind, seed, times, positions, flags, wraps }
}

/// Euler-Maruyama for `dx = b dt + dW`, `Var(dW) = (hbar / m_i) dt` per axis.
///
/// Trajectory `j` draws from ChaCha8 seeded with `params.seed` on stream
/// `j`, so results do not depend on thread scheduling.
pub fn integrate_nelson(series: &SnapshotSeries, starts: &[Vec<f64>], hbar: f64, params: NelsonParams) -> Result<TrajectoryEnsemble> {
    let steps = time_grid(series, params.dt)?;
    let every = params.record_every.max(1);
    let (t0, dt) = (series.start_time(), params.dt);
    let grid = series.grid().clone();
    let n = grid.n_axes();
    if starts.iter().any(|s| s.len() != n) {
        return Err(Error::Incompatible("start configuration has wrong dimension".into()));
    }
    let sigma: Vec<f64> = (0..n)
        .map(|a| params.diffusion_scale * (hbar / series.particles()[a / grid.dim].mass * dt).sqrt())
        .collect();
    let tracks: Vec<Track> = starts
        .par_iter()
        .enumerate()
        .map(|(j, start)| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(j as u64);
            let mut x = start.clone();
            let mut track = Track { positions: vec![x.clone()], flag: TrajectoryFlag::Ok, wraps: 0 };
            for s in 0..steps {
                let t = t0 + s as f64 * dt;
                let b = if params.drift {
                    match series.velocity(&x, t, params.diffusion_scale) {
                        Ok(b) => b,
                        Err(e) => {
                            track.flag = match classify(&e) {
                                Stop::Node => TrajectoryFlag::NodeHalt,
                                Stop::Left => TrajectoryFlag::LeftDomain,
                            };
                            break;
                        }
                    }
                } else {
                    vec![0.0; n]
                };
                for a in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[a] += b[a] * dt + sigma[a] * z;
                }
                match wrap_into(&grid, &mut x) {
                    Some(w) => track.wraps += w,
                    None => {
                        track.flag = TrajectoryFlag::LeftDomain;
                        break;
                    }
                }
                if (s + 1) % every == 0 || s + 1 == steps {
                    track.positions.push(x.clone());
                }
            }
            track
        })
        .collect();
    Ok(assemble(EnsembleKind::Nelson, Some(params.seed), recorded_times(t0, dt, steps, every), tracks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::field::Field;
    use crate::configspace::init::hermite_function;
    use num_complex::Complex64;

    fn stationary() -> Vec<Field> {
        let g = GridSpec::uniform(1, 1, 128, 8.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(hermite_function(0, 1.0, x[0]), 0.0)).unwrap();
        vec![f.clone(), f.with_time(1.0)]
    }

    #[test]
    fn real_eigenstate_trajectories_stand_still() {
        let s = SnapshotSeries::new(&stationary(), VectorPotentialSpec::Zero).unwrap();
        let starts = vec![vec![-1.2], vec![0.0], vec![0.77]];
        let e = integrate_bohm(&s, &starts, IntegrationOptions::new(0.01)).unwrap();
        assert_eq!(e.times.len(), 101);
        for (p, x0) in e.positions.iter().zip(&starts) {
            assert_eq!(p.len(), 101);
            assert!(p.iter().all(|x| (x[0] - x0[0]).abs() < 1e-10));
        }
    }

    #[test]
    fn nelson_is_reproducible() {
        let s = SnapshotSeries::new(&stationary(), VectorPotentialSpec::Zero).unwrap();
        let starts: Vec<Vec<f64>> = (0..16).map(|k| vec![k as f64 / 8.0 - 1.0]).collect();
        let p = NelsonParams::new(42, 0.01);
        let a = integrate_nelson(&s, &starts, 1.0, p).unwrap();
        let b = integrate_nelson(&s, &starts, 1.0, p).unwrap();
        assert_eq!(a, b);
        let c = integrate_nelson(&s, &starts, 1.0, NelsonParams::new(43, 0.01)).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn zero_diffusion_is_euler_bohm() {
        let g = GridSpec::uniform(1, 1, 128, 8.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), 0.5 * x[0] + 0.1 * x[0] * x[0]))
            .unwrap();
        let s = SnapshotSeries::new(&[f.clone(), f.with_time(0.5)], VectorPotentialSpec::Zero).unwrap();
        let starts = vec![vec![0.3], vec![-0.4]];
        let mut p = NelsonParams::new(1, 0.01);
        p.diffusion_scale = 0.0;
        let n = integrate_nelson(&s, &starts, 1.0, p).unwrap();
        let opts = IntegrationOptions { dt: 0.01, record_every: 1, scheme: Scheme::Euler };
        let b = integrate_bohm(&s, &starts, opts).unwrap();
        assert_eq!(n.positions, b.positions);
    }

    #[test]
    fn csv_header_and_flags() {
        let s = SnapshotSeries::new(&stationary(), VectorPotentialSpec::Zero).unwrap();
        let mut opts = IntegrationOptions::new(0.25);
        opts.record_every = 2;
        let e = integrate_bohm(&s, &[vec![0.5]], opts).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf, 1, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,traj_id,flag,x1_1");
        assert_eq!(lines.len(), 1 + 3);
        assert!(lines[1].starts_with("0,0,OK,"));
    }

    #[test]
    fn node_start_halts() {
        let g = GridSpec::uniform(1, 1, 64, 6.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(hermite_function(1, 1.0, x[0]), 0.0)).unwrap();
        let s = SnapshotSeries::new(&[f.clone(), f.with_time(1.0)], VectorPotentialSpec::Zero).unwrap();
        let e = integrate_bohm(&s, &[vec![0.01], vec![1.0]], IntegrationOptions::new(0.1)).unwrap();
        assert_eq!(e.flags, vec![TrajectoryFlag::NodeHalt, TrajectoryFlag::Ok]);
        assert_eq!(e.positions[0].len(), 1);
        assert_eq!(e.halted(), 1);
    }
}
