//! Sites of the extended lattice `Z^d x Z^nu`, finite regions, boundaries and
//! exhaustions.
//!
//! Sites are stored as flat `i64` coordinates, spatial axes first. Every
//! region keeps its sites in lexicographic order, which is also the basis
//! order of assembled operators.

mod hull;

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point `(j, n)` with `j` in `Z^d` and `n` in `Z^nu`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SitePoint {
    pub j: Vec<i64>,
    pub n: Vec<i64>,
}

impl SitePoint {
    pub fn new(j: Vec<i64>, n: Vec<i64>) -> Self {
        Self { j, n }
    }

    pub fn origin(d: usize, nu: usize) -> Self {
        Self { j: vec![0; d], n: vec![0; nu] }
    }

    /// Splits flat coordinates after the first `d` entries.
    pub fn from_coords(coords: &[i64], d: usize) -> Self {
        Self { j: coords[..d].to_vec(), n: coords[d..].to_vec() }
    }

    pub fn coords(&self) -> Vec<i64> {
        let mut c = self.j.clone();
        c.extend_from_slice(&self.n);
        c
    }

    pub fn dim(&self) -> usize {
        self.j.len() + self.n.len()
    }

    /// l1 norm.
    pub fn norm(&self) -> i64 {
        self.j.iter().chain(&self.n).map(|c| c.abs()).sum()
    }
}

/// l1 distance between flat coordinates.
pub fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Box,
    ElementaryRegion,
    /// Arbitrary finite site set, produced by exhaustions.
    Subset,
}

/// Parameters that regenerate a region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Descriptor {
    Box { center: Vec<i64>, radius: u32 },
    Elementary { half_widths: Vec<u32>, offset: Vec<i64>, translate: Vec<i64> },
    Subset { sites: Vec<Vec<i64>> },
}

/// The rectangle `prod_i [-M_i, M_i] + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub half_widths: Vec<u32>,
    pub offset: Vec<i64>,
}

impl Rectangle {
    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let lo = self.offset.iter().zip(&self.half_widths).map(|(o, &m)| o - m as i64).collect();
        let hi = self.offset.iter().zip(&self.half_widths).map(|(o, &m)| o + m as i64).collect();
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RegionRepr", try_from = "RegionRepr")]
pub struct Region {
    d: usize,
    nu: usize,
    kind: RegionKind,
    descriptor: Descriptor,
    coords: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RegionRepr {
    kind: RegionKind,
    descriptor: Descriptor,
    d: usize,
    nu: usize,
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr { kind: r.kind, descriptor: r.descriptor, d: r.d, nu: r.nu }
    }
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        let region = match (&r.kind, r.descriptor) {
            (RegionKind::Box, Descriptor::Box { center, radius }) => {
                check_dims(r.d, r.nu, center.len())?;
                make_box(&SitePoint::from_coords(&center, r.d), radius)
            }
            (RegionKind::ElementaryRegion, Descriptor::Elementary { half_widths, offset, translate }) => {
                check_dims(r.d, r.nu, translate.len())?;
                make_elementary_region(&Rectangle { half_widths, offset }, &SitePoint::from_coords(&translate, r.d))?
            }
            (RegionKind::Subset, Descriptor::Subset { sites }) => Region::subset(r.d, r.nu, sites)?,
            _ => return Err(invalid("descriptor", "does not match region kind")),
        };
        Ok(region)
    }
}

fn check_dims(d: usize, nu: usize, got: usize) -> Result<()> {
    if d + nu != got {
        return Err(Error::DimensionMismatch { expected: d + nu, got });
    }
    Ok(())
}

/// Calls `f` on every point of the rectangle `[lo, hi]` in lexicographic order.
fn for_each_point(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut x = lo.to_vec();
    loop {
        f(&x);
        let mut axis = x.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if x[axis] < hi[axis] {
                x[axis] += 1;
                break;
            }
            x[axis] = lo[axis];
        }
    }
}

/// The box `[-N, N]^{d+nu} + center`, in lexicographic site order.
pub fn make_box(center: &SitePoint, radius: u32) -> Region {
    let c = center.coords();
    let r = radius as i64;
    let lo: Vec<i64> = c.iter().map(|x| x - r).collect();
    let hi: Vec<i64> = c.iter().map(|x| x + r).collect();
    let side = 2 * radius as usize + 1;
    let mut coords = Vec::with_capacity(side.pow(c.len() as u32) * c.len());
    for_each_point(&lo, &hi, |x| coords.extend_from_slice(x));
    Region {
        d: center.j.len(),
        nu: center.n.len(),
        kind: RegionKind::Box,
        descriptor: Descriptor::Box { center: c, radius },
        coords,
    }
}

/// The elementary region `R \ (R + m)` for the rectangle `R` and translate `m`.
pub fn make_elementary_region(rect: &Rectangle, translate: &SitePoint) -> Result<Region> {
    let m = translate.coords();
    if rect.half_widths.len() != m.len() || rect.offset.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: rect.half_widths.len() });
    }
    if m.iter().all(|&x| x == 0) {
        return Err(Error::EmptyRegion);
    }
    let (lo, hi) = rect.bounds();
    let mut coords = Vec::new();
    let mut shifted = vec![0i64; m.len()];
    for_each_point(&lo, &hi, |x| {
        for i in 0..x.len() {
            shifted[i] = x[i] - m[i];
        }
        let in_shift = shifted.iter().zip(lo.iter().zip(&hi)).all(|(s, (a, b))| a <= s && s <= b);
        if !in_shift {
            coords.extend_from_slice(x);
        }
    });
    Ok(Region {
        d: translate.j.len(),
        nu: translate.n.len(),
        kind: RegionKind::ElementaryRegion,
        descriptor: Descriptor::Elementary { half_widths: rect.half_widths.clone(), offset: rect.offset.clone(), translate: m },
        coords,
    })
}

impl Region {
    /// A region given by an explicit site list; duplicates are removed.
    pub fn subset(d: usize, nu: usize, mut sites: Vec<Vec<i64>>) -> Result<Region> {
        if let Some(bad) = sites.iter().find(|s| s.len() != d + nu) {
            return Err(Error::DimensionMismatch { expected: d + nu, got: bad.len() });
        }
        sites.sort();
        sites.dedup();
        let coords = sites.iter().flatten().copied().collect();
        Ok(Region { d, nu, kind: RegionKind::Subset, descriptor: Descriptor::Subset { sites }, coords })
    }

    fn from_mask(parent: &Region, mask: &[bool]) -> Region {
        let sites: Vec<Vec<i64>> = (0..parent.len()).filter(|&i| mask[i]).map(|i| parent.site(i).to_vec()).collect();
        let coords = sites.iter().flatten().copied().collect();
        Region { d: parent.d, nu: parent.nu, kind: RegionKind::Subset, descriptor: Descriptor::Subset { sites }, coords }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn dim(&self) -> usize {
        self.d + self.nu
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Flat coordinates of site `i`.
    pub fn site(&self, i: usize) -> &[i64] {
        let k = self.dim();
        &self.coords[i * k..(i + 1) * k]
    }

    pub fn site_point(&self, i: usize) -> SitePoint {
        SitePoint::from_coords(self.site(i), self.d)
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    /// Center and radius when the region is a box.
    pub fn as_box(&self) -> Option<(&[i64], u32)> {
        match &self.descriptor {
            Descriptor::Box { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }

    /// Position of `x` in the site order.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        if let Some((c, r)) = self.as_box() {
            let side = 2 * r as i64 + 1;
            let mut idx = 0i64;
            for (xi, ci) in x.iter().zip(c) {
                let off = xi - ci + r as i64;
                if off < 0 || off >= side {
                    return None;
                }
                idx = idx * side + off;
            }
            return Some(idx as usize);
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.site(mid).cmp(x) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.index_of(x).is_some()
    }

    /// Componentwise bounds of the sites.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let k = self.dim();
        let mut lo = vec![i64::MAX; k];
        let mut hi = vec![i64::MIN; k];
        for s in self.sites() {
            for i in 0..k {
                lo[i] = lo[i].min(s[i]);
                hi[i] = hi[i].max(s[i]);
            }
        }
        (lo, hi)
    }

    /// l1 diameter, computed from the extreme values of every signed sum.
    pub fn diameter(&self) -> i64 {
        if self.is_empty() {
            return 0;
        }
        let k = self.dim();
        let mut best = 0;
        for signs in 0u32..(1 << (k - 1)) {
            let (mut lo, mut hi) = (i64::MAX, i64::MIN);
            for s in self.sites() {
                let v: i64 = (0..k).map(|i| if (signs >> i) & 1 == 1 { -s[i] } else { s[i] }).sum();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            best = best.max(hi - lo);
        }
        best
    }

    /// The distinct spatial coordinates `j` of the sites.
    pub fn j_projection(&self) -> BTreeSet<Vec<i64>> {
        project(self, Axis::J)
    }
}

/// Interior and exterior boundary of a sub-region inside an ambient region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySet {
    /// Sites of the sub-region with a neighbour in `ambient \ sub`.
    pub interior: Vec<SitePoint>,
    /// Sites of `ambient \ sub` with a neighbour in the sub-region.
    pub exterior: Vec<SitePoint>,
}

/// Ambient indices of the interior and exterior boundary of `sub`.
pub(crate) fn boundary_indices(ambient: &Region, sub: &Region) -> Result<(Vec<usize>, Vec<usize>)> {
    if ambient.dim() != sub.dim() {
        return Err(Error::DimensionMismatch { expected: ambient.dim(), got: sub.dim() });
    }
    let mut in_sub = vec![false; ambient.len()];
    for s in sub.sites() {
        let i = ambient.index_of(s).ok_or(Error::NotSubset)?;
        in_sub[i] = true;
    }
    let (mut interior, mut exterior) = (Vec::new(), Vec::new());
    let mut probe = Vec::new();
    for i in 0..ambient.len() {
        let x = ambient.site(i);
        let mut hit = false;
        'axes: for axis in 0..x.len() {
            for step in [-1i64, 1] {
                probe.clear();
                probe.extend_from_slice(x);
                probe[axis] += step;
                if let Some(k) = ambient.index_of(&probe) {
                    if in_sub[k] != in_sub[i] {
                        hit = true;
                        break 'axes;
                    }
                }
            }
        }
        if hit {
            if in_sub[i] {
                interior.push(i);
            } else {
                exterior.push(i);
            }
        }
    }
    Ok((interior, exterior))
}

/// Boundaries of `sub` relative to `ambient`.
pub fn boundaries(ambient: &Region, sub: &Region) -> Result<BoundarySet> {
    let (int, ext) = boundary_indices(ambient, sub)?;
    Ok(BoundarySet {
        interior: int.into_iter().map(|i| ambient.site_point(i)).collect(),
        exterior: ext.into_iter().map(|i| ambient.site_point(i)).collect(),
    })
}

/// Exhaustion of `ambient` around `center`: `S_0` is the box of radius
/// `width` about `center` intersected with `ambient`, and `S_{k+1}` adds the
/// radius-`width` boxes about every site of `S_k \ S_{k-1}`. The list stops at
/// the last proper subset of `ambient`.
pub fn exhaustion(ambient: &Region, center: &SitePoint, width: u32) -> Result<Vec<Region>> {
    let c = center.coords();
    if c.len() != ambient.dim() {
        return Err(Error::DimensionMismatch { expected: ambient.dim(), got: c.len() });
    }
    if !ambient.contains(&c) {
        return Err(Error::NotSubset);
    }
    let w = width as i64;
    let mut mask = vec![false; ambient.len()];
    let mut count = 0usize;
    let mut shell: Vec<usize> = Vec::new();
    let mark = |x: &[i64], mask: &mut Vec<bool>, shell: &mut Vec<usize>, count: &mut usize| {
        let lo: Vec<i64> = x.iter().map(|v| v - w).collect();
        let hi: Vec<i64> = x.iter().map(|v| v + w).collect();
        for_each_point(&lo, &hi, |y| {
            if let Some(k) = ambient.index_of(y) {
                if !mask[k] {
                    mask[k] = true;
                    shell.push(k);
                    *count += 1;
                }
            }
        });
    };
    mark(&c, &mut mask, &mut shell, &mut count);
    let mut out = Vec::new();
    while count < ambient.len() {
        out.push(Region::from_mask(ambient, &mask));
        let previous: Vec<usize> = core::mem::take(&mut shell);
        for k in previous {
            let x = ambient.site(k).to_vec();
            mark(&x, &mut mask, &mut shell, &mut count);
        }
        if shell.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Whether the convex envelopes of two regions are disjoint. For two boxes
/// this is plain set disjointness.
pub fn disjoint(a: &Region, b: &Region) -> bool {
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    let separated = (0..a.dim()).any(|i| ahi[i] < blo[i] || bhi[i] < alo[i]);
    if separated {
        return true;
    }
    if a.kind() == RegionKind::Box && b.kind() == RegionKind::Box {
        return false;
    }
    let pa: Vec<&[i64]> = a.sites().collect();
    let pb: Vec<&[i64]> = b.sites().collect();
    let ca = hull::extreme_candidates(&pa, |x| a.contains(x));
    let cb = hull::extreme_candidates(&pb, |x| b.contains(x));
    !hull::hulls_intersect(&ca, &cb)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    J,
    N,
}

/// Projection of a region onto its spatial or frequency coordinates.
pub fn project(region: &Region, axis: Axis) -> BTreeSet<Vec<i64>> {
    let d = region.d();
    region
        .sites()
        .map(|s| match axis {
            Axis::J => s[..d].to_vec(),
            Axis::N => s[d..].to_vec(),
        })
        .collect()
}
