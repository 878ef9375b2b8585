//! Text emitters: CSV tables, census JSON and SVG pictures of the fundamental domain.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::flow::Trajectory;
use crate::geometry::TorusSystem;
use crate::loopspace::DiscreteLoop;
use crate::minimax::{Census, ScanRow};
use crate::taimanov::GridRegion;

/// Creates `dir` if needed and writes `name` into it.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// Columns `t,q1,q2,v1,v2,E`, positions lifted.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,q1,q2,v1,v2,E\n");
    for ((t, st), e) in traj.times.iter().zip(&traj.states).zip(&traj.energies) {
        writeln!(s, "{t},{},{},{},{},{e}", st.q.x, st.q.y, st.v.x, st.v.y).unwrap();
    }
    s
}

/// Long format `orbit,i,q1,q2` over lifted vertices, one block per orbit.
pub fn orbits_csv<'a>(orbits: impl IntoIterator<Item = (usize, &'a DiscreteLoop)>) -> String {
    let mut s = String::from("orbit,i,q1,q2\n");
    for (id, l) in orbits {
        for (i, v) in l.vertices().iter().enumerate() {
            writeln!(s, "{id},{i},{},{}", v.x, v.y).unwrap();
        }
    }
    s
}

/// Columns `k,n,c,residual,T,winding_a,winding_b,status`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("k,n,c,residual,T,winding_a,winding_b,status\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{},{},{},{}", r.k, r.n, r.c, r.residual, r.period, r.winding_a, r.winding_b, r.status)
            .unwrap();
    }
    s
}

pub fn census_json(census: &Census) -> String {
    serde_json::to_string_pretty(census).expect("census serializes")
}

const PALETTE: [&str; 6] = ["#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e", "#17202a"];
const SIZE: f64 = 512.0;

fn px(x: f64) -> String {
    format!("{:.2}", x * SIZE)
}

/// The square `[0, 1)^2` with an optional shaded region and the given loops.
///
/// Each loop is drawn once for every lattice translate that meets the square
/// and clipped to it, which unwraps curves that cross the boundary. `q2`
/// points up.
pub fn svg_fundamental_domain(system: &TorusSystem, loops: &[&DiscreteLoop], region: Option<&GridRegion>) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(s, "<title>metric {}, field {}</title>", system.metric.name(), system.density.name()).unwrap();
    s.push_str(r#"<defs><clipPath id="domain"><rect x="0" y="0" width="512" height="512"/></clipPath></defs>"#);
    s.push('\n');
    s.push_str(r##"<rect x="0" y="0" width="512" height="512" fill="#ffffff" stroke="#000000"/>"##);
    s.push('\n');
    s.push_str(r#"<g transform="translate(0 512) scale(1 -1)" clip-path="url(#domain)">"#);
    s.push('\n');
    if let Some(r) = region {
        let cell = 1.0 / r.m as f64;
        s.push_str(r##"<g fill="#aed6f1" stroke="none">"##);
        for i in 0..r.m {
            for j in 0..r.m {
                if r.contains(i, j) {
                    let (x, y, w) = (px(i as f64 * cell), px(j as f64 * cell), px(cell));
                    write!(s, r#"<rect x="{x}" y="{y}" width="{w}" height="{w}"/>"#).unwrap();
                }
            }
        }
        s.push_str("</g>\n");
    }
    for (n, l) in loops.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let (lo, hi) = l
            .vertices()
            .iter()
            .fold(((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY)), |(lo, hi), v| {
                ((lo.0.min(v.x), lo.1.min(v.y)), (hi.0.max(v.x), hi.1.max(v.y)))
            });
        // closing vertex, so the last edge is drawn too
        let end = l.vertex(0) + l.closing();
        let (hi0, hi1) = (hi.0.max(end.x), hi.1.max(end.y));
        for a in lo.0.floor() as i64..=hi0.floor() as i64 {
            for b in lo.1.floor() as i64..=hi1.floor() as i64 {
                let mut d = String::new();
                for (i, v) in l.vertices().iter().chain(std::iter::once(&end)).enumerate() {
                    let cmd = if i == 0 { 'M' } else { 'L' };
                    write!(d, "{cmd}{} {} ", px(v.x - a as f64), px(v.y - b as f64)).unwrap();
                }
                if l.is_contractible() {
                    d.push('Z');
                }
                writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.trim_end()).unwrap();
            }
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, TangentState};
    use crate::geometry::{MagneticDensity, Vec2};

    #[test]
    fn trajectory_columns() {
        let sys = TorusSystem::flat(MagneticDensity::constant(0.0));
        let traj =
            integrate(&sys, TangentState::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)), 0.002, 1e-3, false).unwrap();
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,q1,q2,v1,v2,E");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0,1,0,0.5");
    }

    #[test]
    fn winding_loop_is_unwrapped() {
        let sys = TorusSystem::flat(MagneticDensity::constant(0.0));
        // diagonal loop through the corner: visible in several translates
        let l = DiscreteLoop::from_fn(16, (1, 1), 1.0, |s| Vec2::new(s - 0.5, s)).unwrap();
        let svg = svg_fundamental_domain(&sys, &[&l], None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.matches("<path").count() >= 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn orbit_rows() {
        let l = DiscreteLoop::from_fn(4, (0, 1), 1.0, |s| Vec2::new(0.25, s)).unwrap();
        let csv = orbits_csv([(7, &l)]);
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(2).unwrap(), "7,1,0.25,0.25");
    }
}
