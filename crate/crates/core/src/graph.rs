//! The quotient graph M = ({R, S, T}, {RS, ST, ST}) and its maximal abelian
//! cover, the magnifier graph G = Z x M.
//!
//! Every lifted arc is labelled by the cell of its origin. With that labelling
//! the only arcs that cross cells are `(j, e-)`, running `S_j -> T_{j-1}`, and
//! `(j, ē-)`, running `T_j -> S_{j+1}`. The lifted reverse of `(j, e-)` is
//! therefore `(j-1, ē-)`.

use std::fmt;

use crate::error::{Result, WalkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    R,
    S,
    T,
}

impl Vertex {
    /// Matrix order used by the twisted random-walk operator.
    pub const ALL: [Vertex; 3] = [Vertex::R, Vertex::S, Vertex::T];

    pub fn index(self) -> usize {
        match self {
            Vertex::R => 0,
            Vertex::S => 1,
            Vertex::T => 2,
        }
    }

    pub fn out_degree(self) -> usize {
        Arc::ALL.iter().filter(|a| a.origin() == self).count()
    }
}

/// Symmetric arcs of M. `Bar` variants are the inverse arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arc {
    E0,
    EPlus,
    EMinus,
    E0Bar,
    EPlusBar,
    EMinusBar,
}

impl Arc {
    /// Fixed layout order: e0, e+, e-, ē0, ē+, ē-.
    pub const ALL: [Arc; 6] = [
        Arc::E0,
        Arc::EPlus,
        Arc::EMinus,
        Arc::E0Bar,
        Arc::EPlusBar,
        Arc::EMinusBar,
    ];

    pub fn index(self) -> usize {
        match self {
            Arc::E0 => 0,
            Arc::EPlus => 1,
            Arc::EMinus => 2,
            Arc::E0Bar => 3,
            Arc::EPlusBar => 4,
            Arc::EMinusBar => 5,
        }
    }

    pub fn from_index(i: usize) -> Option<Arc> {
        Arc::ALL.get(i).copied()
    }

    pub fn reverse(self) -> Arc {
        match self {
            Arc::E0 => Arc::E0Bar,
            Arc::EPlus => Arc::EPlusBar,
            Arc::EMinus => Arc::EMinusBar,
            Arc::E0Bar => Arc::E0,
            Arc::EPlusBar => Arc::EPlus,
            Arc::EMinusBar => Arc::EMinus,
        }
    }

    pub fn origin(self) -> Vertex {
        match self {
            Arc::E0 | Arc::EPlus | Arc::EMinus => Vertex::S,
            Arc::E0Bar => Vertex::R,
            Arc::EPlusBar | Arc::EMinusBar => Vertex::T,
        }
    }

    pub fn terminal(self) -> Vertex {
        self.reverse().origin()
    }

    /// Cell offset of the terminal vertex relative to the origin cell.
    pub fn cell_shift(self) -> i64 {
        match self {
            Arc::EMinus => -1,
            Arc::EMinusBar => 1,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arc::E0 => "e0",
            Arc::EPlus => "e+",
            Arc::EMinus => "e-",
            Arc::E0Bar => "~e0",
            Arc::EPlusBar => "~e+",
            Arc::EMinusBar => "~e-",
        }
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A vertex of G: `(cell, vertex)`.
pub type LiftedVertex = (i64, Vertex);

/// An arc of G, identified by the cell of its origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub cell: i64,
    pub arc: Arc,
}

impl Site {
    pub fn new(cell: i64, arc: Arc) -> Self {
        Self { cell, arc }
    }

    pub fn origin(self) -> LiftedVertex {
        (self.cell, self.arc.origin())
    }

    pub fn terminal(self) -> LiftedVertex {
        (self.cell + self.arc.cell_shift(), self.arc.terminal())
    }

    pub fn endpoints(self) -> (LiftedVertex, LiftedVertex) {
        (self.origin(), self.terminal())
    }

    /// The inverse arc in G. Crossing arcs change their cell label.
    pub fn reverse(self) -> Site {
        Site {
            cell: self.cell + self.arc.cell_shift(),
            arc: self.arc.reverse(),
        }
    }
}

/// Closed range of cells `[jmin, jmax]` backing a dense state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    jmin: i64,
    jmax: i64,
}

impl Window {
    pub fn new(jmin: i64, jmax: i64) -> Result<Self> {
        if jmin > jmax {
            return Err(WalkError::Precondition(format!("empty window [{jmin}, {jmax}]")));
        }
        Ok(Self { jmin, jmax })
    }

    /// `[-radius, radius]`.
    pub fn symmetric(radius: u64) -> Self {
        let r = radius as i64;
        Self { jmin: -r, jmax: r }
    }

    pub fn jmin(&self) -> i64 {
        self.jmin
    }

    pub fn jmax(&self) -> i64 {
        self.jmax
    }

    pub fn cells(&self) -> usize {
        (self.jmax - self.jmin + 1) as usize
    }

    pub fn len(&self) -> usize {
        6 * self.cells()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, cell: i64) -> bool {
        (self.jmin..=self.jmax).contains(&cell)
    }

    pub fn cell_range(&self) -> std::ops::RangeInclusive<i64> {
        self.jmin..=self.jmax
    }

    pub fn cell_offset(&self, cell: i64) -> Result<usize> {
        if !self.contains(cell) {
            return Err(WalkError::OutsideWindow {
                cell,
                jmin: self.jmin,
                jmax: self.jmax,
            });
        }
        Ok((cell - self.jmin) as usize)
    }

    /// Cell-major flat index; arcs in `Arc::ALL` order within a cell.
    pub fn flat_index(&self, site: Site) -> Result<usize> {
        Ok(6 * self.cell_offset(site.cell)? + site.arc.index())
    }

    pub fn site_at(&self, index: usize) -> Result<Site> {
        if index >= self.len() {
            return Err(WalkError::Precondition(format!(
                "flat index {index} out of range for window of {} slots",
                self.len()
            )));
        }
        Ok(Site {
            cell: self.jmin + (index / 6) as i64,
            arc: Arc::ALL[index % 6],
        })
    }
}
