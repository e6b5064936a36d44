//! Exchange paths and the phase accumulated along them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::configspace::exchange::{check_pair, exchange_point, exchanged_index};
use crate::configspace::field::{Field, Frame};
use crate::configspace::grid::GridSpec;
use crate::configspace::path::{unwrapped_phase_delta, wrap_phase, GridPath, TransportOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    /// Counter-clockwise in the plane of the first two coordinates.
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Compare the two grid points directly. The only option for `D = 1`,
    /// where every continuous exchange path crosses the coincidence set.
    Direct,
    /// Transport the phase along grid-snapped waypoints.
    Transport { waypoints: Vec<Vec<f64>> },
}

/// A path from `start` to the configuration with particles `i` and `j`
/// swapped (to `start` itself for an even winding count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangePath {
    pub pair: (usize, usize),
    pub frame: Frame,
    /// Grid-snapped start configuration.
    pub start: Vec<f64>,
    pub route: Route,
    pub handedness: Option<Handedness>,
    /// Number of half turns; 1 is the simple left-handed exchange.
    pub winding: i32,
    /// Other particles inside the swept disc.
    pub enclosed: Vec<usize>,
}

fn snap(grid: &GridSpec, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != grid.n_axes() || !grid.contains(x) {
        return Err(Error::InvalidPath("start configuration outside the grid".into()));
    }
    Ok(grid.point(grid.nearest_flat(x)))
}

fn handedness_of(n: i32) -> Option<Handedness> {
    match n.signum() {
        1 => Some(Handedness::Left),
        -1 => Some(Handedness::Right),
        _ => None,
    }
}

impl ExchangePath {
    pub fn direct(grid: &GridSpec, frame: Frame, i: usize, j: usize, start: &[f64]) -> Result<Self> {
        Ok(ExchangePath {
            pair: (i, j),
            frame,
            start: snap(grid, start)?,
            route: Route::Direct,
            handedness: None,
            winding: 1,
            enclosed: vec![],
        })
    }

    /// Rotates particles `i` and `j` about their midpoint by `winding * pi`
    /// in the plane of their first two coordinates; positive is
    /// counter-clockwise. The separation is scaled by
    /// `1 + bulge * sin(pi s)` along the way, which gives homotopic variants.
    pub fn rotation(grid: &GridSpec, i: usize, j: usize, start: &[f64], winding: i32, bulge: f64) -> Result<Self> {
        if grid.dim < 2 {
            return Err(Error::InvalidPath("rotation needs D >= 2".into()));
        }
        let x0 = snap(grid, start)?;
        let (d, n_waypoints) = (grid.dim, 64 * winding.unsigned_abs().max(1) as usize);
        let (xi, xj) = (i * d, j * d);
        let c = [(x0[xi] + x0[xj]) / 2.0, (x0[xi + 1] + x0[xj + 1]) / 2.0];
        let r = [x0[xi] - c[0], x0[xi + 1] - c[1]];
        let radius = (r[0] * r[0] + r[1] * r[1]).sqrt();
        if radius == 0.0 {
            return Err(Error::InvalidPath("start lies on the coincidence set".into()));
        }
        let total = winding as f64 * PI;
        let mut waypoints = Vec::with_capacity(n_waypoints + 1);
        for s in 0..=n_waypoints {
            let u = s as f64 / n_waypoints as f64;
            let (sn, cs) = (total * u).sin_cos();
            let scale = 1.0 + bulge * (PI * u).sin();
            let rr = [scale * (cs * r[0] - sn * r[1]), scale * (sn * r[0] + cs * r[1])];
            let mut x = x0.clone();
            x[xi] = c[0] + rr[0];
            x[xi + 1] = c[1] + rr[1];
            x[xj] = c[0] - rr[0];
            x[xj + 1] = c[1] - rr[1];
            waypoints.push(x);
        }
        *waypoints.last_mut().expect("non-empty") = end_point(grid, Frame::Absolute, &x0, i, j, winding);
        let reach = radius * (1.0 + bulge.max(0.0));
        let enclosed = (0..grid.n_particles)
            .filter(|&k| k != i && k != j)
            .filter(|&k| ((x0[k * d] - c[0]).powi(2) + (x0[k * d + 1] - c[1]).powi(2)).sqrt() < reach)
            .collect();
        Ok(ExchangePath {
            pair: (i, j),
            frame: Frame::Absolute,
            start: x0,
            route: Route::Transport { waypoints },
            handedness: handedness_of(winding),
            winding,
            enclosed,
        })
    }

    /// The same rotation for a relative-coordinate field: `r` turns by
    /// `winding * pi` about the origin.
    pub fn relative_rotation(grid: &GridSpec, start: &[f64], winding: i32, bulge: f64) -> Result<Self> {
        if grid.n_particles != 1 || grid.dim != 2 {
            return Err(Error::InvalidPath("relative paths need a single 2D relative coordinate".into()));
        }
        let r0 = snap(grid, start)?;
        if r0[0] == 0.0 && r0[1] == 0.0 {
            return Err(Error::InvalidPath("start lies on the coincidence set".into()));
        }
        let n_waypoints = 64 * winding.unsigned_abs().max(1) as usize;
        let total = winding as f64 * PI;
        let mut waypoints: Vec<Vec<f64>> = (0..=n_waypoints)
            .map(|s| {
                let u = s as f64 / n_waypoints as f64;
                let (sn, cs) = (total * u).sin_cos();
                let scale = 1.0 + bulge * (PI * u).sin();
                vec![scale * (cs * r0[0] - sn * r0[1]), scale * (sn * r0[0] + cs * r0[1])]
            })
            .collect();
        *waypoints.last_mut().expect("non-empty") = end_point(grid, Frame::Relative, &r0, 0, 1, winding);
        Ok(ExchangePath {
            pair: (0, 1),
            frame: Frame::Relative,
            start: r0,
            route: Route::Transport { waypoints },
            handedness: handedness_of(winding),
            winding,
            enclosed: vec![],
        })
    }

    /// Simple: one half turn, enclosing nobody (always true for `Direct`).
    pub fn is_simple(&self) -> bool {
        self.winding.abs() == 1 && self.enclosed.is_empty()
    }

    pub fn class_label(&self) -> String {
        match (&self.route, self.handedness) {
            (Route::Direct, _) => "direct".into(),
            (_, Some(Handedness::Left)) if self.is_simple() => "simple-left".into(),
            (_, Some(Handedness::Right)) if self.is_simple() => "simple-right".into(),
            _ => format!("winding{:+}", self.winding),
        }
    }

    /// Grid path for transport routes; checks that it ends at the exchanged
    /// (or, for even windings, the original) configuration.
    pub fn grid_path(&self, grid: &GridSpec) -> Result<Option<GridPath>> {
        let Route::Transport { waypoints } = &self.route else { return Ok(None) };
        let p = GridPath::from_waypoints(grid, waypoints)?;
        let s = p.start();
        let want = if self.winding.rem_euclid(2) == 1 {
            exchanged_index(grid, self.frame, s, self.pair.0, self.pair.1)
        } else {
            s
        };
        if p.end() != want {
            return Err(Error::InvalidPath("path does not end at the exchanged configuration".into()));
        }
        Ok(Some(p))
    }
}

fn end_point(grid: &GridSpec, frame: Frame, x0: &[f64], i: usize, j: usize, winding: i32) -> Vec<f64> {
    if winding.rem_euclid(2) == 1 {
        let e = exchange_point(grid, frame, x0, i, j);
        // the exchanged point is on the grid up to the periodic seam
        grid.point(grid.nearest_flat(&e.iter().zip(&grid.extent).map(|(v, l)| v.clamp(-l, *l)).collect::<Vec<_>>()))
    } else {
        x0.to_vec()
    }
}

/// Unreduced and reduced phase of one exchange path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPhase {
    pub raw: f64,
    pub gamma: f64,
}

/// `S(end) - S(start)` along the path, as raw sum and reduced to `(-pi, pi]`.
pub fn exchange_phase(field: &Field, path: &ExchangePath, opts: TransportOptions) -> Result<PathPhase> {
    let grid = field.grid();
    if path.frame != field.frame() {
        return Err(Error::Incompatible("path and field use different frames".into()));
    }
    let raw = match path.grid_path(grid)? {
        Some(p) => unwrapped_phase_delta(field, &p, opts)?,
        None => {
            let k = grid.nearest_flat(&path.start);
            check_pair(grid, path.frame, path.pair.0, path.pair.1)?;
            let p = exchanged_index(grid, path.frame, k, path.pair.0, path.pair.1);
            for idx in [k, p] {
                if field.is_node(idx, opts.eps) {
                    return Err(Error::NodeProximity { index: idx });
                }
            }
            let v = field.values();
            (v[p] * v[k].conj()).arg()
        }
    };
    Ok(PathPhase { raw, gamma: wrap_phase(raw) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::init::{build_field, Initializer, Orbital, Symmetry};

    #[test]
    fn rotation_ends_exchanged() {
        let g = GridSpec::uniform(2, 2, 16, 4.0).unwrap();
        let p = ExchangePath::rotation(&g, 0, 1, &[1.0, 0.5, -1.0, 0.0], 1, 0.0).unwrap();
        let gp = p.grid_path(&g).unwrap().unwrap();
        assert_eq!(g.point(gp.end()), vec![-1.0, 0.0, 1.0, 0.5]);
        assert!(p.is_simple());
        assert_eq!(p.class_label(), "simple-left");
    }

    #[test]
    fn antisymmetric_2d_transport_is_pi() {
        let g = GridSpec::uniform(2, 2, 24, 4.0).unwrap();
        // complex orbitals, so the node set has codimension two
        let gauss = |c: Vec<f64>, k: Vec<f64>| Orbital::Gaussian { center: c, sigma: 1.0, momentum: k };
        let orbitals = vec![gauss(vec![-0.5, 0.0], vec![0.0, 0.8]), gauss(vec![0.5, 0.3], vec![0.6, 0.0])];
        let f = build_field(
            &g,
            &Initializer::Symmetrized { orbitals, symmetry: Symmetry::Antisymmetric },
        )
        .unwrap();
        for (w, bulge) in [(1, 0.0), (1, 0.3), (-1, 0.0)] {
            let p = ExchangePath::rotation(&g, 0, 1, &[1.0, 0.0, -1.0, 0.0], w, bulge).unwrap();
            let ph = exchange_phase(&f, &p, TransportOptions::default()).unwrap();
            assert!((ph.gamma.abs() - PI).abs() < 1e-9, "{w} {bulge}: {:?}", ph);
        }
    }

    #[test]
    fn anyon_half_turns() {
        let g = GridSpec::uniform(1, 2, 128, 6.0).unwrap();
        let f = build_field(&g, &Initializer::Anyon { nu: 0.5, radius: 2.5, width: 0.8 }).unwrap();
        for n in [-2, -1, 1, 2] {
            let p = ExchangePath::relative_rotation(&g, &[2.5, 0.0], n, 0.0).unwrap();
            let ph = exchange_phase(&f, &p, TransportOptions::default()).unwrap();
            assert!((ph.raw - n as f64 * PI / 2.0).abs() < 1e-9, "{n}: {}", ph.raw);
        }
    }

    #[test]
    fn direct_route_1d() {
        let g = GridSpec::uniform(2, 1, 32, 5.0).unwrap();
        let herm = |n| Orbital::Hermite { levels: vec![n], omega: 1.0, center: vec![], momentum: vec![] };
        let f = build_field(
            &g,
            &Initializer::Symmetrized { orbitals: vec![herm(0), herm(1)], symmetry: Symmetry::Antisymmetric },
        )
        .unwrap();
        let p = ExchangePath::direct(&g, Frame::Absolute, 0, 1, &[0.7, -0.4]).unwrap();
        let ph = exchange_phase(&f, &p, TransportOptions::default()).unwrap();
        assert!((ph.gamma - PI).abs() < 1e-12);
    }
}
