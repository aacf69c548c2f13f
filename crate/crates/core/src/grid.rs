//! Binary unit-cell worlds and their text file format.
//!
//! File layout: first line `d l`, second line `2^(d*l)` characters `0`/`1`,
//! row-major with axis 1 varying fastest.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::index::{MAX_DEPTH, MAX_DIM};

/// Largest number of cells a world may hold.
pub const MAX_CELLS: usize = 1 << 28;

#[derive(Clone, PartialEq, Eq)]
pub struct GridWorld {
    dim: usize,
    depth: u32,
    cells: Vec<bool>,
}

impl GridWorld {
    pub fn new(dim: usize, depth: u32, cells: Vec<bool>) -> Result<Self> {
        let expected = Self::cell_count_for(dim, depth)?;
        if cells.len() != expected {
            return Err(Error::GridSize {
                expected,
                actual: cells.len(),
            });
        }
        Ok(GridWorld { dim, depth, cells })
    }

    pub fn empty(dim: usize, depth: u32) -> Result<Self> {
        let n = Self::cell_count_for(dim, depth)?;
        Ok(GridWorld {
            dim,
            depth,
            cells: vec![false; n],
        })
    }

    pub fn full(dim: usize, depth: u32) -> Result<Self> {
        let n = Self::cell_count_for(dim, depth)?;
        Ok(GridWorld {
            dim,
            depth,
            cells: vec![true; n],
        })
    }

    /// Number of unit cells in a world of the given shape.
    pub fn cell_count_for(dim: usize, depth: u32) -> Result<usize> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Depth(depth));
        }
        let bits = dim as u64 * depth as u64;
        if bits >= usize::BITS as u64 || (1usize << bits) > MAX_CELLS {
            return Err(Error::Parameter(format!(
                "world with d={dim}, depth={depth} is too large"
            )));
        }
        Ok(1 << bits)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Cells per axis.
    #[inline]
    pub fn side(&self) -> usize {
        1 << self.depth
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [bool] {
        &mut self.cells
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn density(&self) -> f64 {
        self.obstacle_count() as f64 / self.len() as f64
    }

    /// Linear index of a cell, first axis fastest.
    #[inline]
    pub fn linear(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for &c in coords.iter().rev() {
            idx = (idx << self.depth) | c;
        }
        idx
    }

    /// Inverse of [`GridWorld::linear`].
    pub fn coords(&self, mut linear: usize) -> Vec<usize> {
        let mask = self.side() - 1;
        (0..self.dim)
            .map(|_| {
                let c = linear & mask;
                linear >>= self.depth;
                c
            })
            .collect()
    }

    pub fn in_bounds(&self, coords: &[usize]) -> bool {
        coords.len() == self.dim && coords.iter().all(|&c| c < self.side())
    }

    #[inline]
    pub fn get(&self, coords: &[usize]) -> bool {
        self.cells[self.linear(coords)]
    }

    #[inline]
    pub fn set(&mut self, coords: &[usize], value: bool) {
        let i = self.linear(coords);
        self.cells[i] = value;
    }

    #[inline]
    pub fn get_linear(&self, linear: usize) -> bool {
        self.cells[linear]
    }

    /// Cell holding a world point under the half-open convention.
    pub fn cell_of_point(&self, point: &[f64]) -> Result<Vec<usize>> {
        let side = self.side() as f64;
        if point.len() != self.dim || point.iter().any(|&x| !(x >= 0.0 && x < side)) {
            return Err(Error::OutOfBounds(point.to_vec()));
        }
        Ok(point.iter().map(|&x| x.floor() as usize).collect())
    }

    /// Linear index of the cell holding `point`, or `None` outside the world.
    pub fn linear_of_point(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim {
            return None;
        }
        let side = self.side();
        let mut linear = 0;
        for &x in point.iter().rev() {
            if !(x >= 0.0 && x < side as f64) {
                return None;
            }
            linear = linear * side + x as usize;
        }
        Some(linear)
    }

    /// Center of a unit cell in world units.
    pub fn cell_center(&self, coords: &[usize]) -> Vec<f64> {
        coords.iter().map(|&c| c as f64 + 0.5).collect()
    }

    /// Coordinates of the corner cells at the origin and the far corner.
    pub fn opposite_corners(&self) -> (Vec<usize>, Vec<usize>) {
        (vec![0; self.dim], vec![self.side() - 1; self.dim])
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("missing header line".into()))??;
        let mut parts = header.split_whitespace();
        let dim: usize = parse_field(parts.next(), "dimension")?;
        let depth: u32 = parse_field(parts.next(), "depth")?;
        if parts.next().is_some() {
            return Err(Error::Format(format!("unexpected header `{header}`")));
        }
        let body = lines
            .next()
            .ok_or_else(|| Error::Format("missing cell line".into()))??;
        let cells = body
            .trim_end_matches('\r')
            .bytes()
            .map(|b| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                other => Err(Error::Format(format!("unexpected cell character {:?}", other as char))),
            })
            .collect::<Result<Vec<_>>>()?;
        for rest in lines {
            if !rest?.trim().is_empty() {
                return Err(Error::Format("trailing content after cell line".into()));
            }
        }
        GridWorld::new(dim, depth, cells)
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "{} {}", self.dim, self.depth)?;
        let body: Vec<u8> = self.cells.iter().map(|&c| if c { b'1' } else { b'0' }).collect();
        writer.write_all(&body)?;
        writeln!(writer)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("map text is ASCII")
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("bad {what}")))
}

impl std::fmt::Debug for GridWorld {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridWorld")
            .field("dim", &self.dim)
            .field("depth", &self.depth)
            .field("obstacles", &self.obstacle_count())
            .finish()
    }
}
