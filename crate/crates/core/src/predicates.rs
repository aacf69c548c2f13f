//! Built-in analytic obstacle predicates.
//!
//! Text syntax (coordinates in unit-cell units):
//!
//! * `spheres:x1,..,xd,r;x1,..,xd,r;...` solid balls.
//! * `checkerboard:P` alternating `P`-sided blocks, the block holding the
//!   origin free.
//! * `wall:A,X,G` a slab `X <= x_A < X + 1` across the world, with a free
//!   gap `G` cells wide centered on the middle of axis `A + 1 (mod d)`.
//!
//! Points outside the world count as obstacles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampling::ObstaclePredicate;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Spheres(Vec<(Vec<f64>, f64)>),
    Checkerboard { period: f64 },
    Wall { axis: usize, position: f64, gap: f64 },
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("predicate `{s}` has no `name:` prefix")))?;
        let numbers = |part: &str| -> Result<Vec<f64>> {
            part.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Format(format!("bad number `{t}` in `{s}`")))
                })
                .collect()
        };
        match name.trim() {
            "spheres" => {
                let mut balls = Vec::new();
                for part in args.split(';').filter(|p| !p.trim().is_empty()) {
                    let mut v = numbers(part)?;
                    if v.len() < 2 {
                        return Err(Error::Format(format!("sphere `{part}` needs a center and a radius")));
                    }
                    let r = v.pop().expect("non-empty");
                    if r < 0.0 {
                        return Err(Error::Format(format!("negative radius in `{part}`")));
                    }
                    balls.push((v, r));
                }
                if balls.is_empty() {
                    return Err(Error::Format("`spheres:` needs at least one sphere".into()));
                }
                Ok(Shape::Spheres(balls))
            }
            "checkerboard" => match numbers(args)?.as_slice() {
                &[p] if p > 0.0 => Ok(Shape::Checkerboard { period: p }),
                _ => Err(Error::Format(format!(
                    "`{s}`: expected checkerboard:PERIOD with PERIOD > 0"
                ))),
            },
            "wall" => match numbers(args)?.as_slice() {
                &[a, x, g] if a >= 0.0 && a.fract() == 0.0 && g >= 0.0 => Ok(Shape::Wall {
                    axis: a as usize,
                    position: x,
                    gap: g,
                }),
                _ => Err(Error::Format(format!("`{s}`: expected wall:AXIS,POSITION,GAP"))),
            },
            other => Err(Error::Format(format!("unknown predicate `{other}`"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Spheres(balls) => {
                write!(f, "spheres:")?;
                for (i, (c, r)) in balls.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    for x in c {
                        write!(f, "{x},")?;
                    }
                    write!(f, "{r}")?;
                }
                Ok(())
            }
            Shape::Checkerboard { period } => write!(f, "checkerboard:{period}"),
            Shape::Wall { axis, position, gap } => write!(f, "wall:{axis},{position},{gap}"),
        }
    }
}

/// A [`Shape`] placed in a `2^depth`-sided world of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeWorld {
    shape: Shape,
    dim: usize,
    size: f64,
}

impl ShapeWorld {
    pub fn new(shape: Shape, dim: usize, depth: u32) -> Result<Self> {
        match &shape {
            Shape::Spheres(balls) => {
                if let Some((c, _)) = balls.iter().find(|(c, _)| c.len() != dim) {
                    return Err(Error::Format(format!(
                        "sphere center has {} coordinates, world has {dim}",
                        c.len()
                    )));
                }
            }
            Shape::Wall { axis, .. } if *axis >= dim => {
                return Err(Error::Format(format!("wall axis {axis} outside dimension {dim}")));
            }
            _ => {}
        }
        Ok(ShapeWorld {
            shape,
            dim,
            size: 2f64.powi(depth as i32),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
}

impl ObstaclePredicate for ShapeWorld {
    fn is_obstacle(&self, p: &[f64]) -> bool {
        if p.len() != self.dim || p.iter().any(|&x| !(0.0..self.size).contains(&x)) {
            return true;
        }
        match &self.shape {
            Shape::Spheres(balls) => balls.iter().any(|(c, r)| {
                let d2: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= r * r
            }),
            Shape::Checkerboard { period } => {
                let s: i64 = p.iter().map(|x| (x / period).floor() as i64).sum();
                s.rem_euclid(2) == 1
            }
            Shape::Wall { axis, position, gap } => {
                let x = p[*axis];
                if x < *position || x >= position + 1.0 {
                    return false;
                }
                if self.dim == 1 {
                    return true;
                }
                let along = p[(axis + 1) % self.dim];
                let mid = self.size / 2.0;
                !(along >= mid - gap / 2.0 && along < mid + gap / 2.0)
            }
        }
    }
}
