//! Corner crops holding whole periodic units, and their block grids.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Size of one periodic unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Periodicity {
    /// Columns in a periodic unit (`P_r`).
    pub row_period: usize,
    /// Rows in a periodic unit (`P_c`).
    pub col_period: usize,
}

impl Periodicity {
    /// `rows` is the unit height, `cols` the unit width.
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidPeriodicity(format!(
                "periods must be at least 1, got {rows} rows x {cols} cols"
            )));
        }
        Ok(Self {
            row_period: cols,
            col_period: rows,
        })
    }

    /// Height of a periodic unit in pixels.
    pub fn unit_rows(&self) -> usize {
        self.col_period
    }

    /// Width of a periodic unit in pixels.
    pub fn unit_cols(&self) -> usize {
        self.row_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    TopLeft,
    BottomLeft,
    TopRight,
    BottomRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::TopLeft,
        Corner::BottomLeft,
        Corner::TopRight,
        Corner::BottomRight,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Corner::TopLeft => "top_left",
            Corner::BottomLeft => "bottom_left",
            Corner::TopRight => "top_right",
            Corner::BottomRight => "bottom_right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Placement of one whole-period crop inside the source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CropSpec {
    pub corner: Corner,
    pub row_offset: usize,
    pub col_offset: usize,
    pub crop_height: usize,
    pub crop_width: usize,
}

impl CropSpec {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row_offset
            && row < self.row_offset + self.crop_height
            && col >= self.col_offset
            && col < self.col_offset + self.crop_width
    }
}

/// Pixel rectangle `[row, row + height) x [col, col + width)` in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.height && col >= self.col && col < self.col + self.width
    }
}

/// Decomposition of a crop into periodic blocks, numbered `1..=n_blocks`
/// row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockGrid {
    pub crop: CropSpec,
    pub period: Periodicity,
    pub rows_of_blocks: usize,
    pub cols_of_blocks: usize,
    pub n_blocks: usize,
}

impl BlockGrid {
    /// Image-coordinate rectangle of block `k` (1-based).
    pub fn block_rect(&self, k: usize) -> Result<Rect> {
        self.check_index(k)?;
        let i = k - 1;
        let (br, bc) = (i / self.cols_of_blocks, i % self.cols_of_blocks);
        Ok(Rect {
            row: self.crop.row_offset + br * self.period.unit_rows(),
            col: self.crop.col_offset + bc * self.period.unit_cols(),
            height: self.period.unit_rows(),
            width: self.period.unit_cols(),
        })
    }

    /// Block (1-based) covering the image pixel, if it lies inside the crop.
    pub fn block_at(&self, row: usize, col: usize) -> Option<usize> {
        if !self.crop.contains(row, col) {
            return None;
        }
        let br = (row - self.crop.row_offset) / self.period.unit_rows();
        let bc = (col - self.crop.col_offset) / self.period.unit_cols();
        Some(br * self.cols_of_blocks + bc + 1)
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_blocks {
            return Err(Error::BlockOutOfRange {
                index: k,
                n_blocks: self.n_blocks,
            });
        }
        Ok(())
    }

    pub fn rects(&self) -> impl Iterator<Item = Rect> + '_ {
        (1..=self.n_blocks).map(move |k| self.block_rect(k).expect("index in range"))
    }
}

/// The four whole-period crops anchored at the image corners.
///
/// Crop height is `floor(M / P_c) * P_c` and width `floor(N / P_r) * P_r`;
/// at least two whole units are required along each axis.
pub fn four_crops(height: usize, width: usize, period: Periodicity) -> Result<[CropSpec; 4]> {
    let (pc, pr) = (period.unit_rows(), period.unit_cols());
    let units_down = height / pc;
    let units_across = width / pr;
    if units_down < 2 {
        return Err(Error::TooFewPeriods {
            dimension: "height",
            extent: height,
            period: pc,
            units: units_down,
        });
    }
    if units_across < 2 {
        return Err(Error::TooFewPeriods {
            dimension: "width",
            extent: width,
            period: pr,
            units: units_across,
        });
    }
    let crop_height = units_down * pc;
    let crop_width = units_across * pr;
    let (bottom, right) = (height - crop_height, width - crop_width);
    Ok(Corner::ALL.map(|corner| {
        let (row_offset, col_offset) = match corner {
            Corner::TopLeft => (0, 0),
            Corner::BottomLeft => (bottom, 0),
            Corner::TopRight => (0, right),
            Corner::BottomRight => (bottom, right),
        };
        CropSpec {
            corner,
            row_offset,
            col_offset,
            crop_height,
            crop_width,
        }
    }))
}

pub fn block_grid(crop: CropSpec, period: Periodicity) -> Result<BlockGrid> {
    let (pc, pr) = (period.unit_rows(), period.unit_cols());
    if crop.crop_height == 0 || crop.crop_width == 0 || !crop.crop_height.is_multiple_of(pc) || !crop.crop_width.is_multiple_of(pr) {
        return Err(Error::GeometryMismatch(format!(
            "crop {}x{} is not a whole number of {pc}x{pr} units",
            crop.crop_height, crop.crop_width
        )));
    }
    let rows_of_blocks = crop.crop_height / pc;
    let cols_of_blocks = crop.crop_width / pr;
    Ok(BlockGrid {
        crop,
        period,
        rows_of_blocks,
        cols_of_blocks,
        n_blocks: rows_of_blocks * cols_of_blocks,
    })
}

/// Copies the crop window out of `g`.
pub fn crop_image(g: &GrayImage, crop: &CropSpec) -> Result<GrayImage> {
    g.sub_image(crop.row_offset, crop.col_offset, crop.crop_height, crop.crop_width)
}

/// Copies block `k` (1-based) out of the full image it was gridded on.
pub fn extract_block(g: &GrayImage, grid: &BlockGrid, k: usize) -> Result<GrayImage> {
    let rect = grid.block_rect(k)?;
    g.sub_image(rect.row, rect.col, rect.height, rect.width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn period(rows: usize, cols: usize) -> Periodicity {
        Periodicity::new(rows, cols).unwrap()
    }

    #[test]
    fn period_names() {
        let p = period(25, 30);
        assert_eq!(p.col_period, 25);
        assert_eq!(p.row_period, 30);
        assert!(Periodicity::new(0, 3).is_err());
    }

    #[test]
    fn fractional_image_crops() {
        let crops = four_crops(266, 244, period(25, 30)).unwrap();
        for c in &crops {
            assert_eq!((c.crop_height, c.crop_width), (250, 240));
        }
        let br = crops.iter().find(|c| c.corner == Corner::BottomRight).unwrap();
        assert_eq!((br.row_offset, br.col_offset), (16, 4));
        let bl = crops.iter().find(|c| c.corner == Corner::BottomLeft).unwrap();
        assert_eq!((bl.row_offset, bl.col_offset), (16, 0));
        let tr = crops.iter().find(|c| c.corner == Corner::TopRight).unwrap();
        assert_eq!((tr.row_offset, tr.col_offset), (0, 4));
    }

    #[test]
    fn exact_multiples_coincide() {
        let crops = four_crops(200, 300, period(25, 30)).unwrap();
        for c in &crops {
            assert_eq!((c.row_offset, c.col_offset, c.crop_height, c.crop_width), (0, 0, 200, 300));
        }
    }

    #[test]
    fn single_vertical_unit_is_rejected() {
        match four_crops(49, 120, period(25, 30)) {
            Err(Error::TooFewPeriods { dimension, units, .. }) => {
                assert_eq!(dimension, "height");
                assert_eq!(units, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            four_crops(100, 59, period(25, 30)),
            Err(Error::TooFewPeriods { dimension: "width", .. })
        ));
    }

    #[test]
    fn grid_sizes() {
        let p = period(25, 30);
        let crops = four_crops(266, 244, p).unwrap();
        let g = block_grid(crops[3], p).unwrap();
        assert_eq!((g.rows_of_blocks, g.cols_of_blocks, g.n_blocks), (10, 8, 80));

        let small = four_crops(50, 60, p).unwrap();
        let g = block_grid(small[0], p).unwrap();
        assert_eq!((g.rows_of_blocks, g.cols_of_blocks, g.n_blocks), (2, 2, 4));
    }

    #[test]
    fn first_block_rectangle_with_offsets() {
        let p = period(25, 30);
        let br = four_crops(266, 244, p).unwrap()[3];
        let g = block_grid(br, p).unwrap();
        let r = g.block_rect(1).unwrap();
        // rows 16..=40, cols 4..=33
        assert_eq!((r.row, r.row + r.height - 1), (16, 40));
        assert_eq!((r.col, r.col + r.width - 1), (4, 33));
        let last = g.block_rect(80).unwrap();
        assert_eq!((last.row + last.height, last.col + last.width), (266, 244));
    }

    #[test]
    fn extract_block_bounds_and_content() {
        let p = period(3, 4);
        let img = GrayImage::filled(9, 8, 5.0).unwrap();
        let grid = block_grid(four_crops(9, 8, p).unwrap()[0], p).unwrap();
        assert!(matches!(
            extract_block(&img, &grid, grid.n_blocks + 1),
            Err(Error::BlockOutOfRange { .. })
        ));
        assert!(extract_block(&img, &grid, 0).is_err());
        for k in 1..=grid.n_blocks {
            let b = extract_block(&img, &grid, k).unwrap();
            assert_eq!((b.height(), b.width()), (3, 4));
            assert!(b.pixels().iter().all(|&v| v == 5.0));
        }
    }

    #[test]
    fn extract_block_finds_marker() {
        let p = period(5, 6);
        let mut px = vec![0.0; 17 * 20];
        px[13 * 20 + 15] = 99.0;
        let img = GrayImage::new(17, 20, px).unwrap();
        for crop in four_crops(17, 20, p).unwrap() {
            let grid = block_grid(crop, p).unwrap();
            let k = grid.block_at(13, 15).unwrap();
            let block = extract_block(&img, &grid, k).unwrap();
            assert!(block.pixels().contains(&99.0));
            for other in (1..=grid.n_blocks).filter(|&o| o != k) {
                assert!(!extract_block(&img, &grid, other).unwrap().pixels().contains(&99.0));
            }
        }
    }

    proptest! {
        #[test]
        fn blocks_tile_crop_exactly(m in 2usize..80, n in 2usize..80, pc in 1usize..20, pr in 1usize..20) {
            prop_assume!(m / pc >= 2 && n / pr >= 2);
            let p = period(pc, pr);
            for crop in four_crops(m, n, p).unwrap() {
                let grid = block_grid(crop, p).unwrap();
                let mut cover = vec![0u32; m * n];
                for (k, rect) in grid.rects().enumerate() {
                    for r in rect.row..rect.row + rect.height {
                        for c in rect.col..rect.col + rect.width {
                            cover[r * n + c] += 1;
                            prop_assert_eq!(grid.block_at(r, c), Some(k + 1));
                        }
                    }
                }
                for r in 0..m {
                    for c in 0..n {
                        let expect = u32::from(crop.contains(r, c));
                        prop_assert_eq!(cover[r * n + c], expect);
                    }
                }
            }
        }

        #[test]
        fn every_pixel_covered_by_some_crop(m in 2usize..60, n in 2usize..60, pc in 1usize..15, pr in 1usize..15) {
            prop_assume!(m / pc >= 2 && n / pr >= 2);
            let crops = four_crops(m, n, period(pc, pr)).unwrap();
            for r in 0..m {
                for c in 0..n {
                    prop_assert!(crops.iter().any(|cr| cr.contains(r, c)));
                }
            }
        }
    }
}
