use serde::{Deserialize, Serialize};

/// Dense symmetric M×M matrix, stored in full for simple serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    size: usize,
    rows: Vec<Vec<f64>>,
}

impl SymmetricMatrix {
    pub fn new(size: usize, diagonal: f64) -> Self {
        let mut rows = vec![vec![0.0; size]; size];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = diagonal;
        }
        Self { size, rows }
    }

    /// Build from full rows; only the upper triangle is read.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let size = rows.len();
        let mut m = Self::new(size, 0.0);
        for i in 0..size {
            for j in i..size {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.rows[i][j] = value;
        self.rows[j][i] = value;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Upper-triangle pairs (i < j).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size).flat_map(move |i| ((i + 1)..self.size).map(move |j| (i, j)))
    }

    /// Reorder rows and columns: entry (a, b) of the result is entry (perm[a], perm[b]).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::new(self.size, 0.0);
        for a in 0..self.size {
            for b in 0..self.size {
                out.rows[a][b] = self.rows[perm[a]][perm[b]];
            }
        }
        out
    }
}
