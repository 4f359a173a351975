use crate::fields::Shape;
use crate::linalg::vec as v;
use serde::{Deserialize, Serialize};

/// Measurable subsets of `Rⁿ` used to localize masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    All,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : u(x) ≤ level}` with `u` the signed distance of `shape`.
    Sublevel {
        shape: Shape,
        #[serde(default)]
        level: f64,
    },
    Union { parts: Vec<Region> },
}

/// Position of a ball relative to a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Inside,
    Outside,
    Mixed,
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Region {
        Region::Ball { center, radius }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => v::dist(x, center) <= *radius,
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| l <= x && x <= h),
            Region::Sublevel { shape, level } => shape.signed_distance(x) <= *level,
            Region::Union { parts } => parts.iter().any(|r| r.contains(x)),
        }
    }

    /// Conservative placement of the ball `B(x, r)`: `Inside` and `Outside`
    /// are only returned when they hold for the whole ball.
    pub fn place(&self, x: &[f64], r: f64) -> Placement {
        match self {
            Region::All => Placement::Inside,
            Region::Ball { center, radius } => {
                let d = v::dist(x, center);
                if d + r <= *radius {
                    Placement::Inside
                } else if d - r > *radius {
                    Placement::Outside
                } else {
                    Placement::Mixed
                }
            }
            Region::Box { lo, hi } => {
                let mut inside = true;
                for k in 0..x.len() {
                    if x[k] + r < lo[k] || x[k] - r > hi[k] {
                        return Placement::Outside;
                    }
                    inside &= lo[k] <= x[k] - r && x[k] + r <= hi[k];
                }
                if inside {
                    Placement::Inside
                } else {
                    Placement::Mixed
                }
            }
            Region::Sublevel { shape, level } => {
                let d = shape.signed_distance(x) - level;
                if d + r <= 0.0 {
                    Placement::Inside
                } else if d - r > 0.0 {
                    Placement::Outside
                } else {
                    Placement::Mixed
                }
            }
            Region::Union { parts } => {
                let mut all_out = true;
                for p in parts {
                    match p.place(x, r) {
                        Placement::Inside => return Placement::Inside,
                        Placement::Mixed => all_out = false,
                        Placement::Outside => {}
                    }
                }
                if all_out {
                    Placement::Outside
                } else {
                    Placement::Mixed
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_is_conservative() {
        let regions = [
            Region::ball(vec![0.0, 0.0], 1.0),
            Region::Box { lo: vec![-1.0, -0.5], hi: vec![0.5, 1.0] },
            Region::Sublevel { shape: Shape::sphere(vec![0.3, 0.0], 0.7), level: 0.1 },
            Region::Union {
                parts: vec![Region::ball(vec![1.0, 0.0], 0.5), Region::ball(vec![-1.0, 0.0], 0.5)],
            },
        ];
        for reg in &regions {
            for i in 0..21 {
                for j in 0..21 {
                    let x = [-1.5 + 0.15 * i as f64, -1.5 + 0.15 * j as f64];
                    let r = 0.2;
                    let samples: Vec<bool> = (0..16)
                        .map(|k| {
                            let a = k as f64 * std::f64::consts::PI / 8.0;
                            reg.contains(&[x[0] + r * a.cos(), x[1] + r * a.sin()])
                        })
                        .collect();
                    match reg.place(&x, r) {
                        Placement::Inside => assert!(samples.iter().all(|s| *s)),
                        Placement::Outside => assert!(samples.iter().all(|s| !*s)),
                        Placement::Mixed => {}
                    }
                }
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let r = Region::Union { parts: vec![Region::All, Region::ball(vec![1.0], 2.0)] };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"type\":\"union\""));
        assert_eq!(serde_json::from_str::<Region>(&text).unwrap(), r);
    }
}
