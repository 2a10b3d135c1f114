use crate::cube::{line_progressions, CubeShape, SearchOptions};
use crate::error::Result;

/// The `k`-uniform hypergraph whose edges are the non-degenerate lines of `[k]^n`.
#[derive(Debug, Clone)]
pub struct LineHypergraph {
    shape: CubeShape,
    /// Flattened edges, `k` point indices each, in line-encoding order.
    edges: Vec<u32>,
    /// For each point, the edges through it.
    incidence: Vec<Vec<u32>>,
}

impl LineHypergraph {
    pub fn build(shape: CubeShape, opts: &SearchOptions) -> Result<Self> {
        opts.check(shape.k() + 1, shape.n())?;
        let k = shape.k() as u64;
        let mut edges = Vec::new();
        let mut incidence = vec![Vec::new(); shape.size() as usize];
        for (e, (base, step)) in line_progressions(shape, false).into_iter().enumerate() {
            for j in 0..k {
                let p = base + j * step;
                edges.push(p as u32);
                incidence[p as usize].push(e as u32);
            }
        }
        Ok(LineHypergraph { shape, edges, incidence })
    }

    pub fn shape(&self) -> CubeShape {
        self.shape
    }

    pub fn num_points(&self) -> usize {
        self.incidence.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len() / self.shape.k()
    }

    pub fn edge(&self, e: usize) -> &[u32] {
        let k = self.shape.k();
        &self.edges[e * k..(e + 1) * k]
    }

    pub fn edges(&self) -> impl Iterator<Item = &[u32]> {
        self.edges.chunks(self.shape.k())
    }

    pub fn incident(&self, p: usize) -> &[u32] {
        &self.incidence[p]
    }
}
