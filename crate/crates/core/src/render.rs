//! Grid pictures of point sets and partitions, as ASCII or SVG.

use std::fmt::Write as _;

use crate::geometry::{Dimension, Point};
use crate::partition::Partition;
use crate::pointset::PointSet;

pub const BLANK: char = '.';
pub const MEMBER: char = '#';
pub const ANCHOR: char = '@';
pub const BLOCK_GLYPHS: [char; 4] = ['A', 'B', 'C', 'D'];

const BLOCK_COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const MEMBER_COLOUR: &str = "#333333";
const ANCHOR_COLOUR: &str = "#000000";
const CELL: usize = 24;

/// A grid of glyphs laid out by [`crate::Space::grid_position`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: Dimension,
    cells: Vec<Vec<char>>,
}

impl Grid {
    fn blank(dim: Dimension) -> Self {
        let (rows, cols) = dim.space().grid_shape();
        Grid {
            dim,
            cells: vec![vec![BLANK; cols]; rows],
        }
    }

    fn put(&mut self, p: Point, glyph: char) {
        let (r, c) = self.dim.space().grid_position(p);
        self.cells[r][c] = glyph;
    }

    /// Marks the points of `set` with `#` and `anchor`, if given, with `@`.
    pub fn of_set(dim: Dimension, set: PointSet, anchor: Option<Point>) -> Self {
        let mut g = Grid::blank(dim);
        for p in set & dim.universe() {
            g.put(p, MEMBER);
        }
        if let Some(a) = anchor {
            g.put(a, ANCHOR);
        }
        g
    }

    /// Marks each block with its letter and the anchor with `@`.
    pub fn of_partition(p: &Partition) -> Self {
        let mut g = Grid::blank(p.dim());
        for (block, &glyph) in p.blocks().iter().zip(BLOCK_GLYPHS.iter()) {
            for q in *block {
                g.put(q, glyph);
            }
        }
        if let Some(a) = p.anchor() {
            g.put(a, ANCHOR);
        }
        g
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn glyph(&self, p: Point) -> char {
        let (r, c) = self.dim.space().grid_position(p);
        self.cells[r][c]
    }

    pub fn rows(&self) -> &[Vec<char>] {
        &self.cells
    }

    /// One text line per grid row; 3x3 blocks are separated by a space
    /// between columns and an empty line between rows.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.cells.iter().enumerate() {
            if r > 0 && r % 3 == 0 {
                out.push('\n');
            }
            for (c, &glyph) in row.iter().enumerate() {
                if c > 0 && c % 3 == 0 {
                    out.push(' ');
                }
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }

    /// Reads a grid back from [`Grid::to_ascii`] output.
    pub fn parse_ascii(dim: Dimension, text: &str) -> Option<Self> {
        let cells: Vec<Vec<char>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect())
            .collect();
        let (rows, cols) = dim.space().grid_shape();
        (cells.len() == rows && cells.iter().all(|r| r.len() == cols))
            .then_some(Grid { dim, cells })
    }

    /// Points whose cell is not blank.
    pub fn marked(&self) -> PointSet {
        let space = self.dim.space();
        space
            .universe()
            .iter()
            .filter(|&p| self.glyph(p) != BLANK)
            .collect()
    }

    pub fn to_svg(&self) -> String {
        let rows = self.cells.len();
        let cols = self.cells[0].len();
        let (w, h) = (cols * CELL + 2, rows * CELL + 2);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##);
        for (r, row) in self.cells.iter().enumerate() {
            for (c, &glyph) in row.iter().enumerate() {
                let (x, y) = (1 + c * CELL, 1 + r * CELL);
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="none" stroke="#bbbbbb"/>"##
                );
                let fill = match glyph {
                    ANCHOR => ANCHOR_COLOUR,
                    MEMBER => MEMBER_COLOUR,
                    g => match BLOCK_GLYPHS.iter().position(|&b| b == g) {
                        Some(i) => BLOCK_COLOURS[i],
                        None => continue,
                    },
                };
                let (cx, cy) = (x + CELL / 2, y + CELL / 2);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx}" cy="{cy}" r="{}" fill="{fill}"><title>{glyph}</title></circle>"#,
                    CELL / 3
                );
            }
        }
        for i in (0..=cols).step_by(3) {
            let x = 1 + i * CELL;
            let _ = writeln!(
                s,
                r##"<line x1="{x}" y1="1" x2="{x}" y2="{}" stroke="#000000" stroke-width="2"/>"##,
                h - 1
            );
        }
        for i in (0..=rows).step_by(3) {
            let y = 1 + i * CELL;
            let _ = writeln!(
                s,
                r##"<line x1="1" y1="{y}" x2="{}" y2="{y}" stroke="#000000" stroke-width="2"/>"##,
                w - 1
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
