use std::fmt::Write as _;
use std::path::Path;

use crate::scalar::Real;

use super::{BBox, GeometryError, Point};

/// Collocation nodes in three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Point<T>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point<T>>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        if let Some(index) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { points })
    }

    /// Spatial dimension; the library works in three dimensions.
    pub fn dim(&self) -> usize {
        3
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point<T> {
        &self.points[i]
    }

    pub fn bbox(&self) -> BBox<T> {
        BBox::from_points(&self.points)
    }

    /// Parses whitespace-separated `x y z` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(GeometryError::Parse {
                    line: lineno + 1,
                    message: format!("expected 3 coordinates, found {}", fields.len()),
                });
            }
            let mut p = [T::zero(); 3];
            for (c, f) in p.iter_mut().zip(&fields) {
                let v: f64 = f.parse().map_err(|e| GeometryError::Parse {
                    line: lineno + 1,
                    message: format!("{f:?}: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(GeometryError::NonFinite { index: points.len() });
                }
                *c = T::lit(v);
            }
            points.push(p);
        }
        Self::new(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| GeometryError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// One `x y z` line per point, full round-trip precision.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 64);
        for p in &self.points {
            let _ = writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        out
    }
}
