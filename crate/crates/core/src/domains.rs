//! Axisymmetric domains as node masks: strips, the staircase of strips joined
//! by a core cylinder, half-spaces, balls and whole-space boxes.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Rational = Ratio<u64>;

/// Placement of consecutive staircase strips.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GapRule {
    /// Every gap between consecutive strips has length 1.
    #[default]
    Unit,
    /// Strip `i ≥ 2` starts at `i + q_1 + … + q_{i−1}`; the first gap is then
    /// `2 + q_1/2` and the later ones are 1.
    Literal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// The whole grid minus its truncation boundary.
    WholeSpace,
    /// `|z| < q/2`.
    Strip { q: f64 },
    /// Strips of the given widths along the axis, joined by `{s < core_radius}`.
    Staircase {
        widths: Vec<f64>,
        core_radius: f64,
        gaps: GapRule,
    },
    /// `z < 0`.
    HalfSpace,
    /// `|x| < radius`.
    Ball { radius: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
}

impl DomainSpec {
    pub fn whole_space() -> Self {
        Self { kind: DomainKind::WholeSpace }
    }

    pub fn strip(q: f64) -> Self {
        Self { kind: DomainKind::Strip { q } }
    }

    pub fn staircase(widths: Vec<f64>) -> Self {
        Self {
            kind: DomainKind::Staircase { widths, core_radius: 1.0, gaps: GapRule::Unit },
        }
    }

    pub fn half_space() -> Self {
        Self { kind: DomainKind::HalfSpace }
    }

    pub fn ball(radius: f64) -> Self {
        Self { kind: DomainKind::Ball { radius } }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DomainKind::WholeSpace => "whole-space",
            DomainKind::Strip { .. } => "strip",
            DomainKind::Staircase { .. } => "staircase",
            DomainKind::HalfSpace => "half-space",
            DomainKind::Ball { .. } => "ball",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let ok = match &self.kind {
            DomainKind::Strip { q } => pos(*q),
            DomainKind::Staircase { widths, core_radius, .. } => {
                !widths.is_empty() && widths.iter().all(|&q| pos(q)) && pos(*core_radius)
            }
            DomainKind::Ball { radius } => pos(*radius),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid domain {:?}", self.kind)))
        }
    }

    /// Axial interval the geometry must fit in, if any.
    fn z_extent(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DomainKind::WholeSpace => None,
            DomainKind::Strip { q } => Some((-0.5 * q, 0.5 * q)),
            DomainKind::Staircase { .. } => {
                let a = self.anchors()?;
                Some((a.strips[0].bottom, a.strips.last()?.top))
            }
            DomainKind::HalfSpace => Some((0.0, 0.0)),
            DomainKind::Ball { radius } => Some((-radius, *radius)),
        }
    }

    /// Strip endpoints; `None` for kinds without strips.
    pub fn anchors(&self) -> Option<StripAnchors> {
        match &self.kind {
            DomainKind::Strip { q } => Some(StripAnchors::from_bottoms(&[*q], &[-0.5 * q])),
            DomainKind::Staircase { widths, gaps, .. } => {
                let mut bottoms = Vec::with_capacity(widths.len());
                let mut b = -0.5 * widths[0];
                let mut sum = 0.0;
                for (k, &q) in widths.iter().enumerate() {
                    if k > 0 {
                        b = match gaps {
                            GapRule::Unit => b + widths[k - 1] + 1.0,
                            GapRule::Literal => (k + 1) as f64 + sum,
                        };
                    }
                    bottoms.push(b);
                    sum += q;
                }
                Some(StripAnchors::from_bottoms(widths, &bottoms))
            }
            _ => None,
        }
    }

    /// Pointwise membership of the 3D point with coordinates `(s, z)`.
    pub fn contains(&self, s: f64, z: f64, anchors: Option<&StripAnchors>) -> bool {
        match &self.kind {
            DomainKind::WholeSpace => true,
            DomainKind::Strip { q } => z.abs() < 0.5 * q,
            DomainKind::Staircase { core_radius, .. } => {
                s < *core_radius
                    || anchors
                        .map(|a| a.strips.iter().any(|st| st.bottom < z && z < st.top))
                        .unwrap_or(false)
            }
            DomainKind::HalfSpace => z < 0.0,
            DomainKind::Ball { radius } => s.hypot(z) < *radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripAnchor {
    pub width: f64,
    /// `Q_k^−`.
    pub bottom: f64,
    /// `Q_k^+`.
    pub top: f64,
    pub mid: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StripAnchors {
    pub strips: Vec<StripAnchor>,
    /// `(Q_k^+ + Q_{k+1}^−)/2` for consecutive strips.
    pub gap_midpoints: Vec<f64>,
}

impl StripAnchors {
    fn from_bottoms(widths: &[f64], bottoms: &[f64]) -> Self {
        let strips: Vec<StripAnchor> = widths
            .iter()
            .zip(bottoms)
            .map(|(&q, &b)| StripAnchor { width: q, bottom: b, top: b + q, mid: b + 0.5 * q })
            .collect();
        let gap_midpoints = strips.windows(2).map(|w| 0.5 * (w[0].top + w[1].bottom)).collect();
        Self { strips, gap_midpoints }
    }
}

/// A domain on a particular grid.
#[derive(Clone, Debug)]
pub struct Domain {
    pub spec: DomainSpec,
    pub grid: Grid,
    /// Nodes inside the domain and off the truncation boundary.
    pub mask: Vec<bool>,
    pub anchors: Option<StripAnchors>,
}

impl Domain {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

pub fn build_mask(spec: &DomainSpec, grid: &Grid) -> Result<Domain> {
    spec.validate()?;
    if let Grid::Radial(_) = grid {
        if !matches!(spec.kind, DomainKind::WholeSpace | DomainKind::Ball { .. }) {
            return Err(Error::InvalidParameter(format!(
                "{} is not radially symmetric",
                spec.name()
            )));
        }
    }
    if let Grid::Line(_) = grid {
        if matches!(spec.kind, DomainKind::Staircase { .. }) {
            return Err(Error::InvalidParameter("staircase needs an axial grid".into()));
        }
    }
    let (z_lo, z_hi) = match grid {
        Grid::Radial(_) => (-grid.s_max(), grid.s_max()),
        _ => grid.z_range(),
    };
    if let Some((a, b)) = spec.z_extent() {
        let lateral = match &spec.kind {
            DomainKind::Ball { radius } => matches!(grid, Grid::Line(_)) || grid.s_max() >= *radius,
            DomainKind::Staircase { core_radius, .. } => grid.s_max() > *core_radius,
            _ => true,
        };
        if a < z_lo || b > z_hi || (spec.kind == DomainKind::HalfSpace && a <= z_lo) || !lateral {
            return Err(Error::Extent(format!(
                "{} needs z in [{a}, {b}], grid covers [{z_lo}, {z_hi}] up to s = {}",
                spec.name(),
                grid.s_max()
            )));
        }
    }
    let anchors = spec.anchors();
    let mut mask = grid.interior_mask();
    for i in 0..grid.ns() {
        for j in 0..grid.nz() {
            let k = grid.index(i, j);
            let (s, z) = match grid {
                Grid::Radial(_) => (grid.s(i), 0.0),
                _ => (grid.s(i), grid.z(j)),
            };
            mask[k] = mask[k] && spec.contains(s, z, anchors.as_ref());
        }
    }
    Ok(Domain { spec: spec.clone(), grid: *grid, mask, anchors })
}

/// First `k` terms of the Calkin–Wilf enumeration of the positive rationals.
pub fn enumerate_rationals(k: usize) -> Vec<Rational> {
    let one = Rational::from_integer(1);
    let mut out = Vec::with_capacity(k);
    let mut x = one;
    for _ in 0..k {
        out.push(x);
        // x ↦ 1 / (2⌊x⌋ − x + 1)
        let fl = x.floor();
        x = one / (fl + fl + one - x);
    }
    out
}

/// Parses `a/b` or an integer into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::InvalidParameter(format!("not a positive rational: {t:?}"));
    let r = match t.split_once('/') {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Rational::new(a, b)
        }
        None => Rational::from_integer(t.parse().map_err(|_| bad())?),
    };
    if r == Rational::from_integer(0) {
        return Err(bad());
    }
    Ok(r)
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use proptest::prelude::*;

    fn axial(z_min: f64, z_max: f64) -> Grid {
        build_grid(GridSpec::Axial { hs: 0.25, hz: 0.25, s_max: 4.0, z_min, z_max, dim: 3 }).unwrap()
    }

    fn r(a: u64, b: u64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn strip_mask_is_open_slab() {
        let g = axial(-10.0, 10.0);
        let d = build_mask(&DomainSpec::strip(4.0), &g).unwrap();
        let interior = g.interior_mask();
        for i in 0..g.ns() {
            for j in 0..g.nz() {
                let k = g.index(i, j);
                assert_eq!(d.mask[k], interior[k] && g.z(j).abs() < 2.0);
            }
        }
        assert!(matches!(build_mask(&DomainSpec::strip(30.0), &g), Err(Error::Extent(_))));
    }

    #[test]
    fn staircase_two_strips() {
        let spec = DomainSpec::staircase(vec![1.0, 3.0]);
        let a = spec.anchors().unwrap();
        assert_eq!((a.strips[0].bottom, a.strips[0].top), (-0.5, 0.5));
        assert_eq!((a.strips[1].bottom, a.strips[1].top), (1.5, 4.5));
        assert_eq!(a.gap_midpoints, vec![1.0]);
        let g = axial(-3.0, 8.0);
        let d = build_mask(&spec, &g).unwrap();
        for i in 1..g.ns() - 1 {
            for j in 1..g.nz() - 1 {
                let (s, z) = (g.s(i), g.z(j));
                let inside = s < 1.0 || (-0.5 < z && z < 0.5) || (1.5 < z && z < 4.5);
                assert_eq!(d.mask[g.index(i, j)], inside, "s={s} z={z}");
            }
        }
        assert!(d.count() < g.interior_mask().iter().filter(|&&m| m).count());
    }

    #[test]
    fn literal_gaps() {
        let spec = DomainSpec {
            kind: DomainKind::Staircase { widths: vec![1.0, 3.0, 2.0], core_radius: 1.0, gaps: GapRule::Literal },
        };
        let a = spec.anchors().unwrap();
        assert_eq!(a.strips[1].bottom, 3.0);
        assert_eq!(a.strips[1].bottom - a.strips[0].top, 2.5);
        assert_eq!(a.strips[2].bottom - a.strips[1].top, 1.0);
    }

    #[test]
    fn half_space_and_ball() {
        let g = axial(-5.0, 5.0);
        let d = build_mask(&DomainSpec::half_space(), &g).unwrap();
        for i in 0..g.ns() - 1 {
            for j in 1..g.nz() - 1 {
                assert_eq!(d.mask[g.index(i, j)], g.z(j) < 0.0);
            }
        }
        let b = build_mask(&DomainSpec::ball(3.0), &g).unwrap();
        assert!(b.mask[g.index(0, g.row_of(0.0).unwrap())]);
        assert!(!b.mask[g.index(0, g.row_of(3.0).unwrap())]);
        assert!(build_mask(&DomainSpec::ball(4.5), &g).is_err());
        let radial = build_grid(GridSpec::Radial { h: 0.1, r_max: 5.0, dim: 3 }).unwrap();
        assert!(build_mask(&DomainSpec::strip(2.0), &radial).is_err());
        assert!(build_mask(&DomainSpec::ball(2.0), &radial).is_ok());
    }

    #[test]
    fn rationals() {
        assert_eq!(enumerate_rationals(1), vec![r(1, 1)]);
        assert_eq!(enumerate_rationals(5), vec![r(1, 1), r(1, 2), r(2, 1), r(1, 3), r(3, 2)]);
        let many = enumerate_rationals(500);
        let mut sorted = many.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 500);
        assert!(many.iter().all(|q| *q > r(0, 1)));
        assert_eq!(parse_rational("3/2").unwrap(), r(3, 2));
        assert_eq!(parse_rational(" 4 ").unwrap(), r(4, 1));
        assert!(parse_rational("0").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    proptest! {
        #[test]
        fn strip_masks_nest(q1 in 0.1f64..9.0, dq in 0.0f64..9.0) {
            let g = axial(-10.0, 10.0);
            let a = build_mask(&DomainSpec::strip(q1), &g).unwrap();
            let b = build_mask(&DomainSpec::strip(q1 + dq), &g).unwrap();
            prop_assert!(a.mask.iter().zip(&b.mask).all(|(x, y)| !x || *y));
        }

        #[test]
        fn staircase_anchor_gaps(widths in prop::collection::vec(1u64..40, 1..6), den in 1u64..5) {
            let ws: Vec<f64> = widths.iter().map(|&w| w as f64 / den as f64).collect();
            let a = DomainSpec::staircase(ws.clone()).anchors().unwrap();
            for (k, w) in a.strips.windows(2).enumerate() {
                prop_assert!((w[1].bottom - w[0].top - 1.0).abs() < 1e-12);
                let m = a.gap_midpoints[k];
                prop_assert!(w[0].top < m && m < w[1].bottom);
            }
            for (st, q) in a.strips.iter().zip(&ws) {
                prop_assert!((st.top - st.bottom - q).abs() < 1e-12);
            }
        }

        #[test]
        fn staircase_contains_strips_and_core(widths in prop::collection::vec(1u64..6, 2..4)) {
            let ws: Vec<f64> = widths.iter().map(|&w| w as f64).collect();
            let spec = DomainSpec::staircase(ws);
            let a = spec.anchors().unwrap();
            let g = axial(a.strips[0].bottom - 1.0, a.strips.last().unwrap().top + 1.0);
            let d = build_mask(&spec, &g).unwrap();
            let strip_only = DomainSpec::strip(a.strips[0].width);
            let s1 = build_mask(&strip_only, &g).unwrap();
            prop_assert!(s1.mask.iter().zip(&d.mask).all(|(x, y)| !x || *y));
            for j in 1..g.nz() - 1 {
                prop_assert!(d.mask[g.index(0, j)]);
            }
            prop_assert!(d.count() < g.interior_mask().iter().filter(|&&m| m).count());
        }
    }
}
