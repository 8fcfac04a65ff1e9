use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::Rng;

use super::geometry::{Region, Window, MAX_DIM};
use crate::error::{check_dim, check_probability, Error, Result};

/// A finite point configuration in R^d, one realisation of a point process.
///
/// Points are kept in generation order and may repeat. Equality is multiset
/// equality.
#[derive(Debug, Clone)]
pub struct PointPattern {
    dim: usize,
    coords: Vec<f64>,
}

impl PointPattern {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!("dimension {dim} is outside 1..={MAX_DIM}")));
        }
        Ok(Self { dim, coords: Vec::new() })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: impl IntoIterator<Item = P>) -> Result<Self> {
        let mut pattern = Self::empty(dim)?;
        for p in points {
            pattern.push(p.as_ref())?;
        }
        Ok(pattern)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        check_dim(self.dim, point.len())?;
        self.coords.extend_from_slice(point);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn coords_mut(&mut self) -> &mut Vec<f64> {
        &mut self.coords
    }

    /// Keeps each point independently with probability `p`, in place.
    pub(crate) fn thin_in_place<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) {
        if p >= 1.0 {
            return;
        }
        let dim = self.dim;
        let mut write = 0;
        for read in 0..self.len() {
            if rng.random::<f64>() < p {
                if write != read {
                    self.coords.copy_within(read * dim..(read + 1) * dim, write * dim);
                }
                write += 1;
            }
        }
        self.coords.truncate(write * dim);
    }

    fn sorted_points(&self) -> Vec<&[f64]> {
        let mut pts: Vec<&[f64]> = self.points().collect();
        pts.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        pts
    }
}

impl PartialEq for PointPattern {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.len() == other.len() && self.sorted_points() == other.sorted_points()
    }
}

/// Independent p-thinning: every point survives with probability `p`.
pub fn thin_pattern<R: Rng + ?Sized>(pattern: &PointPattern, p: f64, rng: &mut R) -> Result<PointPattern> {
    check_probability("p", p)?;
    let mut out = pattern.clone();
    out.thin_in_place(p, rng);
    Ok(out)
}

/// Superposition (sum of counting measures) as concatenation.
pub fn superpose(patterns: &[PointPattern]) -> Result<PointPattern> {
    let first = patterns
        .first()
        .ok_or_else(|| Error::Parameter("superposition of zero patterns has no dimension".into()))?;
    let mut out = PointPattern::empty(first.dim)?;
    for p in patterns {
        check_dim(first.dim, p.dim)?;
        out.coords.extend_from_slice(&p.coords);
    }
    Ok(out)
}

/// Number of points in the half-open `region`. The region must have the
/// pattern's dimension.
pub fn count_in(pattern: &PointPattern, region: &Region) -> u64 {
    assert_eq!(pattern.dim(), region.dim(), "count_in: region dimension mismatch");
    pattern.points().filter(|x| region.contains(x)).count() as u64
}

/// Writes one point per line as comma-separated coordinates, after a `#`
/// header carrying the dimension and window.
pub fn write_pattern<W: Write>(mut out: W, pattern: &PointPattern, window: &Window) -> std::io::Result<()> {
    writeln!(out, "# dim={} window={}", pattern.dim(), window)?;
    for p in pattern.points() {
        let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads patterns written by [`write_pattern`]. Several patterns may share a
/// file; each header line starts a new one.
pub fn read_pattern<R: BufRead>(input: R) -> Result<Vec<(PointPattern, Window)>> {
    let mut out: Vec<(PointPattern, Window)> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parameter(format!("read failed: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parameter(format!("pattern line {}: {what}", lineno + 1));
        if let Some(header) = line.strip_prefix('#') {
            let mut dim = None;
            let mut window = None;
            for token in header.split_whitespace() {
                match token.split_once('=') {
                    Some(("dim", v)) => dim = Some(v.parse::<usize>().map_err(|_| bad("bad dim"))?),
                    Some(("window", v)) => window = Some(v.parse::<Window>()?),
                    _ => {}
                }
            }
            let (dim, window) = match (dim, window) {
                (Some(d), Some(w)) => (d, w),
                _ => return Err(bad("header needs dim= and window=")),
            };
            check_dim(window.dim(), dim)?;
            out.push((PointPattern::empty(dim)?, window));
        } else {
            let (pattern, _) = out.last_mut().ok_or_else(|| bad("point before header"))?;
            let point = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad coordinate"))?;
            pattern.push(&point)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Streams;
    use proptest::prelude::*;

    fn five_points() -> PointPattern {
        PointPattern::from_points(2, [[0.1, 0.1], [0.2, 0.5], [0.9, 0.9], [0.2, 0.5], [0.4, 0.0]]).unwrap()
    }

    #[test]
    fn thinning_edges() {
        let mut rng = Streams::new(1).rng(0);
        let p = five_points();
        assert_eq!(thin_pattern(&p, 1.0, &mut rng).unwrap(), p);
        assert!(thin_pattern(&p, 0.0, &mut rng).unwrap().is_empty());
        assert!(thin_pattern(&p, 1.01, &mut rng).is_err());
    }

    #[test]
    fn thinning_keeps_a_subsequence() {
        let mut rng = Streams::new(2).rng(0);
        let p = PointPattern::from_points(1, (0..50).map(|i| [i as f64])).unwrap();
        let t = thin_pattern(&p, 0.5, &mut rng).unwrap();
        let kept: Vec<f64> = t.points().map(|x| x[0]).collect();
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn thinning_five_points_none_kept() {
        let exact = 0.7f64.powi(5);
        let mut rng = Streams::new(3).rng(0);
        let p = five_points();
        let n = 100_000;
        let empty = (0..n).filter(|_| thin_pattern(&p, 0.3, &mut rng).unwrap().is_empty()).count();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((empty as f64 / n as f64 - exact).abs() < 3.0 * se);
    }

    #[test]
    fn superposition_identities() {
        let p = five_points();
        let e = PointPattern::empty(2).unwrap();
        assert_eq!(superpose(&[p.clone(), e.clone()]).unwrap(), p);
        assert!(superpose(&[e.clone(), e.clone()]).unwrap().is_empty());
        assert!(superpose(&[]).is_err());
        let one_d = PointPattern::from_points(1, [[0.5]]).unwrap();
        assert!(matches!(superpose(&[p, one_d]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn equality_is_order_free_but_counts_multiplicity() {
        let a = PointPattern::from_points(1, [[0.1], [0.2], [0.2]]).unwrap();
        let b = PointPattern::from_points(1, [[0.2], [0.1], [0.2]]).unwrap();
        let c = PointPattern::from_points(1, [[0.2], [0.1], [0.1]]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn counting() {
        let e = PointPattern::empty(2).unwrap();
        let r: Region = "[0,1]x[0,1]".parse().unwrap();
        assert_eq!(count_in(&e, &r), 0);
        let p = five_points();
        let flat = Region::new(vec![0.5, 0.0], vec![0.5, 1.0]).unwrap();
        assert_eq!(count_in(&p, &flat), 0);
        // (0.9, 0.9) sits on the upper face of [0,0.9)x[0,1)
        let r: Region = "[0,0.9]x[0,1]".parse().unwrap();
        assert_eq!(count_in(&p, &r), 4);
        assert_eq!(count_in(&p, &"[0.2,0.3]x[0.5,0.6]".parse().unwrap()), 2);
    }

    #[test]
    fn rejects_wrong_point_dimension() {
        let mut p = PointPattern::empty(2).unwrap();
        assert!(p.push(&[0.1]).is_err());
        assert!(PointPattern::empty(0).is_err());
        assert!(PointPattern::empty(4).is_err());
    }

    #[test]
    fn file_format() {
        let w = Window::unit(2).unwrap();
        let mut buf = Vec::new();
        write_pattern(&mut buf, &five_points(), &w).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dim=2 window=[0,1]x[0,1]\n0.1,0.1\n"));
        let back = read_pattern(buf.as_slice()).unwrap();
        assert_eq!(back, vec![(five_points(), w)]);
        assert!(read_pattern("0.1,0.2\n".as_bytes()).is_err());
        assert!(read_pattern("# dim=2 window=[0,1]x[0,1]\n0.1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn file_round_trip(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..40)) {
            let p = PointPattern::from_points(2, points.iter().map(|(a, b)| [*a, *b])).unwrap();
            let w = Window::unit(2).unwrap();
            let mut buf = Vec::new();
            write_pattern(&mut buf, &p, &w).unwrap();
            let back = read_pattern(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            // coordinates survive bit-exactly
            prop_assert_eq!(&back[0].0.coords, &p.coords);
        }

        #[test]
        fn count_is_additive_over_a_grid(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..60), nx in 1usize..5, ny in 1usize..5) {
            let p = PointPattern::from_points(2, points.iter().map(|(a, b)| [*a, *b])).unwrap();
            let grid = crate::point_process::CellGrid::new(Window::unit(2).unwrap(), vec![nx, ny]).unwrap();
            let total: u64 = (0..grid.n_cells()).map(|c| count_in(&p, &grid.cell_region(c))).sum();
            prop_assert_eq!(total, p.len() as u64);
        }

        #[test]
        fn superposition_count_is_sum(a in 0usize..20, b in 0usize..20, c in 0usize..20) {
            let make = |k: usize| PointPattern::from_points(1, (0..k).map(|i| [i as f64 / 20.0])).unwrap();
            let s = superpose(&[make(a), make(b), make(c)]).unwrap();
            prop_assert_eq!(s.len(), a + b + c);
        }
    }
}
