use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A point in three-dimensional space.
pub type Point<T> = [T; 3];

#[inline]
pub fn distance<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    distance_sq(a, b).sqrt()
}

#[inline]
pub fn distance_sq<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub lo: Point<T>,
    pub hi: Point<T>,
}

impl<T: Real> BBox<T> {
    pub fn new(lo: Point<T>, hi: Point<T>) -> Self {
        Self { lo, hi }
    }

    /// Tight box around `points`.
    ///
    /// # Panics
    /// Panics on an empty iterator.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point<T>>) -> Self {
        let mut it = points.into_iter();
        let first = *it.next().expect("bounding box of no points");
        let mut b = Self {
            lo: first,
            hi: first,
        };
        for p in it {
            for a in 0..3 {
                b.lo[a] = b.lo[a].min(p[a]);
                b.hi[a] = b.hi[a].max(p[a]);
            }
        }
        b
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.lo[a] <= self.hi[a])
    }

    pub fn center(&self) -> Point<T> {
        let half = T::lit(0.5);
        [
            half * (self.lo[0] + self.hi[0]),
            half * (self.lo[1] + self.hi[1]),
            half * (self.lo[2] + self.hi[2]),
        ]
    }

    pub fn extent(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    /// Length of the box diagonal, used as the cluster diameter.
    pub fn diameter(&self) -> T {
        distance(&self.lo, &self.hi)
    }

    /// Euclidean distance between the two boxes (zero if they overlap).
    pub fn distance(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for a in 0..3 {
            let gap = (other.lo[a] - self.hi[a])
                .max(self.lo[a] - other.hi[a])
                .max(T::zero());
            acc += gap * gap;
        }
        acc.sqrt()
    }

    /// Distance from a point to the box.
    pub fn distance_to_point(&self, p: &Point<T>) -> T {
        let mut acc = T::zero();
        for a in 0..3 {
            let gap = (self.lo[a] - p[a]).max(p[a] - self.hi[a]).max(T::zero());
            acc += gap * gap;
        }
        acc.sqrt()
    }

    /// Longest axis; the first one wins ties.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for a in 1..3 {
            if self.extent(a) > self.extent(best) {
                best = a;
            }
        }
        best
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] <= self.hi[a])
    }
}

/// Far-field admissibility of two boxes: `η · dist ≥ max(diam_t, diam_s)`.
pub fn admissible<T: Real>(bt: &BBox<T>, bs: &BBox<T>, eta: T) -> bool {
    eta * bt.distance(bs) >= bt.diameter().max(bs.diameter())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_at(o: f64) -> BBox<f64> {
        BBox::new([o; 3], [o + 1.0; 3])
    }

    #[test]
    fn separated_cubes_are_admissible() {
        let (a, b) = (unit_at(0.0), unit_at(3.0));
        assert!((a.diameter() - 3f64.sqrt()).abs() < 1e-15);
        assert!((a.distance(&b) - 2.0 * 3f64.sqrt()).abs() < 1e-15);
        assert!(admissible(&a, &b, 0.8));
    }

    #[test]
    fn box_is_never_admissible_with_itself() {
        let a = unit_at(0.0);
        assert_eq!(a.distance(&a), 0.0);
        assert!(!admissible(&a, &a, 0.8));
        assert!(!admissible(&a, &a, 1e6));
    }

    #[test]
    fn point_distance_and_containment() {
        let a = unit_at(0.0);
        assert!(a.contains(&[0.5, 0.5, 1.0]));
        assert_eq!(a.distance_to_point(&[0.5, 0.5, 0.5]), 0.0);
        assert!((a.distance_to_point(&[2.0, 0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(a.longest_axis(), 0);
        let b = BBox::new([0.0, 0.0, 0.0], [1.0, 2.0, 2.0]);
        assert_eq!(b.longest_axis(), 1);
    }
}
