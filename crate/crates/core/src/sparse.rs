//! Compressed sparse row matrices for assembled operators.

/// Square matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists; columns are sorted and
    /// zero values dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if v != 0.0 {
                    cols.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.vals[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(k, _)| k == c).map_or(0.0, |(_, v)| v)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let (start, end) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in start..end {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut rows = vec![Vec::new(); self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        SparseMatrix::from_rows(rows)
    }

    /// Largest `|A − Aᵀ|` entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - t.get(r, c)).abs());
            }
            for (c, v) in t.row(r) {
                worst = worst.max((v - self.get(r, c)).abs());
            }
        }
        worst
    }

    /// Connected components of the undirected graph whose edges are the
    /// off-diagonal entries with `|a| > threshold`.
    ///
    /// Returns a label per node, labels numbered from 0 in order of first
    /// appearance, and the number of components.
    pub fn components(&self, threshold: f64) -> (Vec<usize>, usize) {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if c != r && v.abs() > threshold {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut root_label = vec![usize::MAX; self.n];
        let mut count = 0;
        let label = (0..self.n)
            .map(|x| {
                let root = find(&mut parent, x);
                if root_label[root] == usize::MAX {
                    root_label[root] = count;
                    count += 1;
                }
                root_label[root]
            })
            .collect();
        (label, count)
    }
}

/// Grid operator stored as one coefficient plane per stencil offset on a
/// grid padded by a zero halo, so every plane applies as contiguous row
/// slices.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    width: usize,
    height: usize,
    halo: usize,
    planes: Vec<(isize, Vec<f64>)>,
}

impl BandedOperator {
    /// Converts a matrix over a `width × height` row-major grid whose rows
    /// reach at most `halo` nodes in each direction.
    pub fn from_matrix(m: &SparseMatrix, width: usize, height: usize, halo: usize) -> Self {
        assert_eq!(m.dim(), width * height);
        let wp = width + 2 * halo;
        let len = wp * (height + 2 * halo);
        let mut planes: Vec<(isize, Vec<f64>)> = Vec::new();
        for r in 0..m.dim() {
            let (ri, rj) = ((r % width) as isize, (r / width) as isize);
            let p = (rj + halo as isize) as usize * wp + (ri + halo as isize) as usize;
            for (c, v) in m.row(r) {
                let (ci, cj) = ((c % width) as isize, (c / width) as isize);
                let (di, dj) = (ci - ri, cj - rj);
                assert!(
                    di.unsigned_abs() <= halo && dj.unsigned_abs() <= halo,
                    "entry beyond halo"
                );
                let offset = dj * wp as isize + di;
                let plane = match planes.iter().position(|(o, _)| *o == offset) {
                    Some(k) => k,
                    None => {
                        planes.push((offset, vec![0.0; len]));
                        planes.len() - 1
                    }
                };
                planes[plane].1[p] = v;
            }
        }
        planes.sort_by_key(|(o, _)| *o);
        BandedOperator {
            width,
            height,
            halo,
            planes,
        }
    }

    pub fn padded_len(&self) -> usize {
        (self.width + 2 * self.halo) * (self.height + 2 * self.halo)
    }

    /// Padded position of node `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> usize {
        (j + self.halo) * (self.width + 2 * self.halo) + i + self.halo
    }

    /// Start of padded grid row `j`.
    pub fn row_start(&self, j: usize) -> usize {
        self.position(0, j)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pad(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.padded_len()];
        for j in 0..self.height {
            let s = self.row_start(j);
            out[s..s + self.width].copy_from_slice(&values[j * self.width..(j + 1) * self.width]);
        }
        out
    }

    pub fn unpad(&self, padded: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for j in 0..self.height {
            let s = self.row_start(j);
            out.extend_from_slice(&padded[s..s + self.width]);
        }
        out
    }

    /// `out = A u` on the grid positions; the halo of `out` is left untouched.
    pub fn apply_padded(&self, u: &[f64], out: &mut [f64]) {
        let w = self.width;
        for j in 0..self.height {
            let s = self.row_start(j);
            out[s..s + w].fill(0.0);
        }
        for (offset, coeffs) in &self.planes {
            for j in 0..self.height {
                let s = self.row_start(j);
                let src = (s as isize + offset) as usize;
                let (o, c, x) = (&mut out[s..s + w], &coeffs[s..s + w], &u[src..src + w]);
                for k in 0..w {
                    o[k] += c[k] * x[k];
                }
            }
        }
    }
}
