//! Binary masks, label maps and the raster algebra the rest of the crate is
//! built on: run-length coding, tight bounding boxes, overlap ratios and
//! connected components.
//!
//! All grids are row-major. Pixel `(row, col)` lives at `row * width + col`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask. Panics on a zero dimension.
    pub fn empty(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "mask dimensions must be >= 1");
        BinaryMask {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut m = Self::empty(height, width);
        m.bits.fill(true);
        m
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Malformed(format!(
                "mask dimensions must be >= 1, got {height}x{width}"
            )));
        }
        if bits.len() != height * width {
            return Err(Error::Malformed(format!(
                "mask of {height}x{width} needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        Ok(BinaryMask {
            height,
            width,
            bits,
        })
    }

    /// Builds a mask by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(height, width);
        for r in 0..height {
            for c in 0..width {
                m.bits[r * width + c] = f(r, c);
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when no pixel is foreground.
    pub fn is_blank(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Iterates `(row, col)` of every foreground pixel in scan order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub(crate) fn ensure_same_dims(&self, other: &BinaryMask) -> Result<()> {
        check_dims((self.height, self.width), (other.height, other.width))
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.ensure_same_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn union_area(&self, other: &BinaryMask) -> Result<usize> {
        self.ensure_same_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a || b)
            .count())
    }
}

pub(crate) fn check_dims(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected_h: expected.0,
            expected_w: expected.1,
            got_h: got.0,
            got_w: got.1,
        });
    }
    Ok(())
}

/// Per-pixel object ids for one frame; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    ids: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "label map dimensions must be >= 1");
        LabelMap {
            height,
            width,
            ids: vec![0; height * width],
        }
    }

    pub fn from_ids(height: usize, width: usize, ids: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || ids.len() != height * width {
            return Err(Error::Malformed(format!(
                "label map of {height}x{width} needs {} ids, got {}",
                height * width,
                ids.len()
            )));
        }
        Ok(LabelMap { height, width, ids })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.ids[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, id: u8) {
        self.ids[row * self.width + col] = id;
    }

    /// The region of object `id` in this frame (blank if not annotated).
    pub fn mask_of(&self, id: u8) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.ids.iter().map(|&v| id != 0 && v == id).collect(),
        }
    }

    pub fn contains_id(&self, id: u8) -> bool {
        id != 0 && self.ids.contains(&id)
    }

    /// Distinct nonzero ids, ascending.
    pub fn present_ids(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &v in &self.ids {
            seen[v as usize] = true;
        }
        (1..=255u8).filter(|&v| seen[v as usize]).collect()
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub row_min: usize,
    pub col_min: usize,
    pub row_max: usize,
    pub col_max: usize,
}

impl BBox {
    pub fn new(row_min: usize, col_min: usize, row_max: usize, col_max: usize) -> Self {
        debug_assert!(row_min <= row_max && col_min <= col_max);
        BBox {
            row_min,
            col_min,
            row_max,
            col_max,
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.row_min <= row && row <= self.row_max && self.col_min <= col && col <= self.col_max
    }

    pub fn height(&self) -> usize {
        self.row_max - self.row_min + 1
    }

    pub fn width(&self) -> usize {
        self.col_max - self.col_min + 1
    }

    /// Smallest box covering both.
    pub fn merge(&self, other: &BBox) -> BBox {
        BBox {
            row_min: self.row_min.min(other.row_min),
            col_min: self.col_min.min(other.col_min),
            row_max: self.row_max.max(other.row_max),
            col_max: self.col_max.max(other.col_max),
        }
    }
}

/// Tight bounding box of the foreground, `None` for a blank mask.
pub fn bbox_of(mask: &BinaryMask) -> Option<BBox> {
    let mut it = mask.foreground();
    let (r0, c0) = it.next()?;
    let mut b = BBox::new(r0, c0, r0, c0);
    for (r, c) in it {
        b.row_min = b.row_min.min(r);
        b.row_max = b.row_max.max(r);
        b.col_min = b.col_min.min(c);
        b.col_max = b.col_max.max(c);
    }
    Some(b)
}

pub fn bbox_contains(bbox: &BBox, row: usize, col: usize) -> bool {
    bbox.contains(row, col)
}

/// True iff some foreground pixel of `mask` lies inside some box.
pub fn intersects_any_bbox(mask: &BinaryMask, boxes: &[BBox]) -> bool {
    if boxes.is_empty() {
        return false;
    }
    boxes.iter().any(|b| {
        let r1 = b.row_max.min(mask.height - 1);
        let c1 = b.col_max.min(mask.width - 1);
        (b.row_min..=r1).any(|r| (b.col_min..=c1).any(|c| mask.get(r, c)))
    })
}

/// `|inner ∩ outer| / |inner|`, or 0 when `inner` is blank.
pub fn coverage_ratio(inner: &BinaryMask, outer: &BinaryMask) -> Result<f64> {
    let hit = inner.intersection_area(outer)?;
    let area = inner.area();
    if area == 0 {
        return Ok(0.0);
    }
    Ok(hit as f64 / area as f64)
}

/// Intersection over union; two blank masks score 1.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.union_area(b)?;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

/// Splits the foreground into connected components (4-connected by default).
///
/// Components are ordered by their first pixel in scan order.
pub fn connected_components(mask: &BinaryMask) -> Vec<BinaryMask> {
    connected_components_with(mask, Connectivity::Four)
}

pub fn connected_components_with(mask: &BinaryMask, conn: Connectivity) -> Vec<BinaryMask> {
    let (h, w) = mask.dims();
    let mut label = vec![0u32; h * w];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if !mask.bits[start] || label[start] != 0 {
            continue;
        }
        let id = out.len() as u32 + 1;
        let mut comp = BinaryMask::empty(h, w);
        label[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            comp.bits[i] = true;
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for (dr, dc) in neighbours(conn) {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if mask.bits[j] && label[j] == 0 {
                    label[j] = id;
                    queue.push_back(j);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn neighbours(conn: Connectivity) -> &'static [(isize, isize)] {
    const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    const EIGHT: [(isize, isize); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    match conn {
        Connectivity::Four => &FOUR,
        Connectivity::Eight => &EIGHT,
    }
}

/// Run-length coded mask. Runs alternate background/foreground, starting
/// with a (possibly zero-length) background run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn encode(mask: &BinaryMask) -> RleMask {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in &mask.bits {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        RleMask {
            height: mask.height,
            width: mask.width,
            counts,
        }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Malformed("RLE dimensions must be >= 1".into()));
        }
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        let expected = (self.height * self.width) as u64;
        if total != expected {
            return Err(Error::Malformed(format!(
                "RLE runs sum to {total}, expected {expected}"
            )));
        }
        if let Some(pos) = self.counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::Malformed(format!(
                "zero-length run at index {}",
                pos + 1
            )));
        }
        let mut bits = Vec::with_capacity(expected as usize);
        let mut value = false;
        for &c in &self.counts {
            bits.extend(std::iter::repeat_n(value, c as usize));
            value = !value;
        }
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            bits,
        })
    }
}

pub fn rle_encode(mask: &BinaryMask) -> RleMask {
    RleMask::encode(mask)
}

pub fn rle_decode(rle: &RleMask) -> Result<BinaryMask> {
    rle.decode()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMask::from_fn(h, w, |r, c| rows[r].as_bytes()[c] == b'#')
    }

    #[test]
    fn rle_trivial_cases() {
        assert_eq!(rle_encode(&BinaryMask::empty(2, 2)).counts, vec![4]);
        assert_eq!(rle_encode(&BinaryMask::full(2, 2)).counts, vec![0, 4]);
        let bg = RleMask {
            height: 2,
            width: 2,
            counts: vec![4],
        };
        assert_eq!(bg.decode().unwrap(), BinaryMask::empty(2, 2));
        let fg = RleMask {
            height: 2,
            width: 2,
            counts: vec![0, 4],
        };
        assert_eq!(fg.decode().unwrap(), BinaryMask::full(2, 2));
    }

    #[test]
    fn rle_rejects_bad_sum_and_interior_zero() {
        let bad = RleMask {
            height: 2,
            width: 2,
            counts: vec![3, 2],
        };
        assert!(matches!(bad.decode(), Err(Error::Malformed(_))));
        let zero = RleMask {
            height: 2,
            width: 2,
            counts: vec![1, 0, 3],
        };
        assert!(zero.decode().is_err());
    }

    #[test]
    fn bbox_examples() {
        let mut m = BinaryMask::empty(8, 8);
        m.set(3, 5, true);
        assert_eq!(bbox_of(&m), Some(BBox::new(3, 5, 3, 5)));
        assert_eq!(bbox_of(&BinaryMask::empty(8, 8)), None);
        let mut m = BinaryMask::empty(8, 8);
        m.set(0, 0, true);
        m.set(7, 2, true);
        assert_eq!(bbox_of(&m), Some(BBox::new(0, 0, 7, 2)));
    }

    #[test]
    fn bbox_membership_is_inclusive() {
        let b = BBox::new(0, 0, 7, 2);
        assert!(bbox_contains(&b, 0, 0));
        assert!(bbox_contains(&b, 7, 2));
        assert!(!bbox_contains(&b, 0, 3));
    }

    #[test]
    fn intersects_any_examples() {
        let mut m = BinaryMask::empty(4, 4);
        m.set(1, 1, true);
        assert!(!intersects_any_bbox(&m, &[]));
        assert!(intersects_any_bbox(&m, &[BBox::new(0, 0, 2, 2)]));
        assert!(!intersects_any_bbox(&m, &[BBox::new(2, 2, 3, 3)]));
    }

    #[test]
    fn coverage_examples() {
        let a = mask_from(&["##..", "##..", "....", "...."]);
        assert_eq!(coverage_ratio(&a, &a).unwrap(), 1.0);
        let b = mask_from(&["....", "....", "..##", "..##"]);
        assert_eq!(coverage_ratio(&a, &b).unwrap(), 0.0);
        let outer = mask_from(&["###.", "#...", "....", "...."]);
        assert_eq!(coverage_ratio(&a, &outer).unwrap(), 0.75);
        assert_eq!(
            coverage_ratio(&BinaryMask::empty(4, 4), &outer).unwrap(),
            0.0
        );
        assert!(coverage_ratio(&a, &BinaryMask::empty(3, 4)).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = mask_from(&["####", "....", "....", "...."]);
        let b = mask_from(&["..##", "..##", "....", "...."]);
        // |a∩b| = 2, |a∪b| = 6
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let c = mask_from(&["....", "....", "....", "####"]);
        assert_eq!(iou(&a, &c).unwrap(), 0.0);
        let e = BinaryMask::empty(4, 4);
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        assert!(iou(&a, &BinaryMask::empty(4, 5)).is_err());
    }

    #[test]
    fn components_connectivity() {
        assert!(connected_components(&BinaryMask::empty(3, 3)).is_empty());
        let diag = mask_from(&["#..", ".#.", "..."]);
        assert_eq!(connected_components(&diag).len(), 2);
        assert_eq!(
            connected_components_with(&diag, Connectivity::Eight).len(),
            1
        );
    }

    fn arb_mask(max: usize) -> impl Strategy<Value = BinaryMask> {
        (1..=max, 1..=max).prop_flat_map(|(h, w)| {
            proptest::collection::vec(any::<bool>(), h * w)
                .prop_map(move |bits| BinaryMask::from_bits(h, w, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip(m in arb_mask(12)) {
            let rle = rle_encode(&m);
            prop_assert_eq!(rle.counts.iter().map(|&c| c as usize).sum::<usize>(), m.height() * m.width());
            prop_assert_eq!(rle_decode(&rle).unwrap(), m);
        }

        #[test]
        fn iou_symmetric(a in arb_mask(6), seed in any::<u64>()) {
            let (h, w) = a.dims();
            let b = BinaryMask::from_fn(h, w, |r, c| (seed >> ((r * w + c) % 64)) & 1 == 1);
            prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
            if !a.is_blank() {
                prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
                let full = BinaryMask::full(h, w);
                prop_assert_eq!(coverage_ratio(&a, &full).unwrap(), 1.0);
            }
        }

        #[test]
        fn bbox_is_tight(m in arb_mask(10)) {
            match bbox_of(&m) {
                None => prop_assert!(m.is_blank()),
                Some(b) => {
                    for (r, c) in m.foreground() {
                        prop_assert!(b.contains(r, c));
                    }
                    prop_assert!(m.foreground().any(|(r, _)| r == b.row_min));
                    prop_assert!(m.foreground().any(|(r, _)| r == b.row_max));
                    prop_assert!(m.foreground().any(|(_, c)| c == b.col_min));
                    prop_assert!(m.foreground().any(|(_, c)| c == b.col_max));
                }
            }
        }

        #[test]
        fn components_partition_foreground(m in arb_mask(10)) {
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let comps = connected_components_with(&m, conn);
                let total: usize = comps.iter().map(|c| c.area()).sum();
                prop_assert_eq!(total, m.area());
                let mut union = BinaryMask::empty(m.height(), m.width());
                for c in &comps {
                    for (r, col) in c.foreground() {
                        prop_assert!(!union.get(r, col));
                        union.set(r, col, true);
                    }
                }
                prop_assert_eq!(&union, &m);
            }
        }
    }
}
