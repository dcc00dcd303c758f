//! Self-similar addressing of gasket cells and the level-n approximating graphs.
//!
//! Vertices are identified across cells by exact dyadic lattice coordinates:
//! a point is stored as integers `(a, b)` meaning `(a·p2 + b·p3) / 2^SCALE_BITS`
//! with `p1` at the origin. Midpoints of cell edges at any supported level are
//! exact in this representation, so shared junction vertices are matched
//! without floating-point comparison.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, SgError};

/// Default ceiling on the level accepted by graph and table builders.
pub const DEFAULT_MAX_LEVEL: usize = 10;

/// Hard ceiling imposed by the dyadic vertex keys.
pub const SCALE_BITS: u32 = 48;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Canonical boundary triangle p1, p2, p3.
pub const BOUNDARY: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3_2]];

/// Address of a cell: a finite word over {1, 2, 3}. The empty word is the
/// whole gasket.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if let Some(bad) = letters.iter().find(|&&l| !(1..=3).contains(&l)) {
            return Err(SgError::InvalidArgument(format!(
                "word letter {bad} outside {{1,2,3}}"
            )));
        }
        Ok(Word(letters))
    }

    /// The word `i i ... i` of the given length.
    pub fn repeated(letter: u8, len: usize) -> Result<Self> {
        Word::new(vec![letter; len])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, letter: u8) -> Word {
        debug_assert!((1..=3).contains(&letter));
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }

    /// `w·1, w·2, w·3`, in that order.
    pub fn refine(&self) -> [Word; 3] {
        [self.child(1), self.child(2), self.child(3)]
    }

    /// All words of the given length in lexicographic order.
    pub fn all_of_length(len: usize) -> Vec<Word> {
        let mut words = vec![Word::empty()];
        for _ in 0..len {
            words = words.iter().flat_map(|w| w.refine()).collect();
        }
        words
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = SgError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                '3' => Ok(3),
                other => Err(SgError::InvalidArgument(format!(
                    "word letter {other:?} outside {{1,2,3}}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word(letters))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `w·1, w·2, w·3`.
pub fn refine_cell(w: &Word) -> [Word; 3] {
    w.refine()
}

/// Exact dyadic point `(a·p2 + b·p3) / 2^SCALE_BITS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct DyadicPoint {
    a: u64,
    b: u64,
}

impl DyadicPoint {
    const ONE: u64 = 1 << SCALE_BITS;

    fn boundary(i: usize) -> Self {
        match i {
            0 => DyadicPoint { a: 0, b: 0 },
            1 => DyadicPoint { a: Self::ONE, b: 0 },
            _ => DyadicPoint { a: 0, b: Self::ONE },
        }
    }

    fn midpoint(self, other: Self) -> Self {
        debug_assert!((self.a + other.a) % 2 == 0 && (self.b + other.b) % 2 == 0);
        DyadicPoint {
            a: (self.a + other.a) / 2,
            b: (self.b + other.b) / 2,
        }
    }

    fn to_plane(self) -> [f64; 2] {
        let s = Self::ONE as f64;
        let a = self.a as f64 / s;
        let b = self.b as f64 / s;
        [a + 0.5 * b, SQRT3_2 * b]
    }
}

/// Images of p1, p2, p3 under the cell map of `w`.
pub fn cell_vertex_coordinates(w: &Word) -> [[f64; 2]; 3] {
    let mut tri = BOUNDARY;
    // phi_w = phi_{w1} o ... o phi_{wn}; apply innermost first.
    for &l in w.letters().iter().rev() {
        let p = BOUNDARY[(l - 1) as usize];
        for v in tri.iter_mut() {
            v[0] = 0.5 * v[0] + 0.5 * p[0];
            v[1] = 0.5 * v[1] + 0.5 * p[1];
        }
    }
    tri
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Oriented edge; `cell` indexes `LevelGraph::cells`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub cell: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub word: Word,
    pub vertices: [usize; 3],
}

/// One end of an edge as seen from a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    /// True when the vertex is the edge's tail.
    pub outgoing: bool,
}

/// The level-n approximating graph.
///
/// Vertex ids are nested: the vertices of level `k ≤ n` carry ids
/// `0..|V_k|`, so a level-k function is a prefix of its level-n extension.
/// Edge `3·c + k` is the k-th edge of cell `c`, oriented `v1→v2`, `v2→v3`,
/// `v3→v1` in the cell's vertex order.
#[derive(Clone, Debug)]
pub struct LevelGraph {
    level: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    cells: Vec<Cell>,
    incidence: Vec<Vec<Incidence>>,
    conductance: f64,
}

impl LevelGraph {
    pub fn build(level: usize) -> Result<Self> {
        build_level_graph_with_limit(level, DEFAULT_MAX_LEVEL)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(5/3)^n`.
    pub fn conductance(&self) -> f64 {
        self.conductance
    }

    /// Ids of p1, p2, p3.
    pub fn boundary(&self) -> [usize; 3] {
        [0, 1, 2]
    }

    pub fn incidence(&self, vertex: usize) -> &[Incidence] {
        &self.incidence[vertex]
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.incidence[vertex].len()
    }

    /// Vertex triples of the level-`k` cells (`k ≤ n`), in lexicographic
    /// order. Vertex i of cell w is vertex i of its descendant `w·i…i`.
    pub fn coarse_cell_vertices(&self, k: usize) -> Vec<[usize; 3]> {
        assert!(k <= self.level, "coarse level {k} above graph level {}", self.level);
        let d = (self.level - k) as u32;
        let block = 3usize.pow(d);
        let stride = (block - 1) / 2;
        (0..3usize.pow(k as u32))
            .map(|j| {
                let base = j * block;
                [
                    self.cells[base].vertices[0],
                    self.cells[base + stride].vertices[1],
                    self.cells[base + 2 * stride].vertices[2],
                ]
            })
            .collect()
    }

    /// Number of vertices of the level-`k` graph, `(3^(k+1) + 3) / 2`.
    pub fn vertex_count_at(k: usize) -> usize {
        (3usize.pow(k as u32 + 1) + 3) / 2
    }

    /// Number of independent cycles, `|E| − |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn to_json(&self) -> GraphJson<'_> {
        GraphJson {
            level: self.level,
            vertices: &self.vertices,
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    tail: e.tail,
                    head: e.head,
                    cell: &self.cells[e.cell].word,
                })
                .collect(),
            cells: self
                .cells
                .iter()
                .map(|c| CellJson {
                    word: &c.word,
                    vids: c.vertices,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct GraphJson<'a> {
    pub level: usize,
    pub vertices: &'a [Vertex],
    pub edges: Vec<EdgeJson<'a>>,
    pub cells: Vec<CellJson<'a>>,
}

#[derive(Serialize)]
pub struct EdgeJson<'a> {
    pub tail: usize,
    pub head: usize,
    pub cell: &'a Word,
}

#[derive(Serialize)]
pub struct CellJson<'a> {
    pub word: &'a Word,
    pub vids: [usize; 3],
}

pub fn build_level_graph(level: usize) -> Result<LevelGraph> {
    LevelGraph::build(level)
}

pub fn build_level_graph_with_limit(level: usize, max_level: usize) -> Result<LevelGraph> {
    let max = max_level.min(SCALE_BITS as usize);
    if level > max {
        return Err(SgError::ResourceLimit { level, max });
    }

    let mut points: Vec<DyadicPoint> = (0..3).map(DyadicPoint::boundary).collect();
    let mut index: HashMap<DyadicPoint, usize> =
        points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut cells = vec![Cell {
        word: Word::empty(),
        vertices: [0, 1, 2],
    }];

    for _ in 0..level {
        let mut next = Vec::with_capacity(cells.len() * 3);
        for cell in &cells {
            let [v1, v2, v3] = cell.vertices;
            let mut mid = |u: usize, v: usize| {
                let p = points[u].midpoint(points[v]);
                *index.entry(p).or_insert_with(|| {
                    points.push(p);
                    points.len() - 1
                })
            };
            let m12 = mid(v1, v2);
            let m13 = mid(v1, v3);
            let m23 = mid(v2, v3);
            let [w1, w2, w3] = cell.word.refine();
            next.push(Cell {
                word: w1,
                vertices: [v1, m12, m13],
            });
            next.push(Cell {
                word: w2,
                vertices: [m12, v2, m23],
            });
            next.push(Cell {
                word: w3,
                vertices: [m13, m23, v3],
            });
        }
        cells = next;
    }

    let vertices: Vec<Vertex> = points
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let [x, y] = p.to_plane();
            Vertex { id, x, y }
        })
        .collect();

    let mut edges = Vec::with_capacity(cells.len() * 3);
    let mut incidence = vec![Vec::with_capacity(4); vertices.len()];
    for (c, cell) in cells.iter().enumerate() {
        let [v1, v2, v3] = cell.vertices;
        for (tail, head) in [(v1, v2), (v2, v3), (v3, v1)] {
            let edge = edges.len();
            edges.push(Edge {
                tail,
                head,
                cell: c,
            });
            incidence[tail].push(Incidence {
                edge,
                neighbor: head,
                outgoing: true,
            });
            incidence[head].push(Incidence {
                edge,
                neighbor: tail,
                outgoing: false,
            });
        }
    }

    Ok(LevelGraph {
        level,
        vertices,
        edges,
        cells,
        incidence,
        conductance: (5.0f64 / 3.0).powi(level as i32),
    })
}
