//! Tensor-train (TT-matrix) linear maps.
//!
//! A [`TtnSpec`] is a chain of four-index cores `G_k[l, i, j, r]` with left
//! rank `l`, input mode `i`, output mode `j` and right rank `r`; the first
//! left rank and the last right rank are 1. It represents the dense map
//!
//! ```text
//! W[(j_1..j_K), (i_1..i_K)] = G_1[:, i_1, j_1, :] · G_2[:, i_2, j_2, :] ··· G_K[:, i_K, j_K, :]
//! ```
//!
//! with the first mode most significant in both the input and the output
//! index. Inputs shorter than the product of input modes are zero-padded.
//!
//! [`SiteTensorTrain`] is the sequence extractor built on the same format: a
//! short chain of cores slides over the sites of the input and the window
//! results are summed. [`SiteTensorTrain::to_spec`] writes it out as one TT
//! core per site, contracted against the outer product of the sites.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{standard_normal, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtCore {
    pub left_rank: usize,
    pub in_mode: usize,
    pub out_mode: usize,
    pub right_rank: usize,
    /// Row-major over `[left][in][out][right]`.
    pub data: Vec<f64>,
}

impl TtCore {
    pub fn new(left_rank: usize, in_mode: usize, out_mode: usize, right_rank: usize, data: Vec<f64>) -> Result<Self> {
        let len = left_rank * in_mode * out_mode * right_rank;
        if len == 0 {
            return Err(Error::InvalidArgument("tensor-train core with a zero dimension".into()));
        }
        if data.len() != len {
            return Err(Error::shape("tensor-train core size", len, data.len()));
        }
        Ok(Self {
            left_rank,
            in_mode,
            out_mode,
            right_rank,
            data,
        })
    }

    pub fn zeros(left_rank: usize, in_mode: usize, out_mode: usize, right_rank: usize) -> Result<Self> {
        Self::new(
            left_rank,
            in_mode,
            out_mode,
            right_rank,
            vec![0.0; left_rank * in_mode * out_mode * right_rank],
        )
    }

    #[inline]
    pub fn at(&self, l: usize, i: usize, j: usize, r: usize) -> f64 {
        self.data[((l * self.in_mode + i) * self.out_mode + j) * self.right_rank + r]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtnSpec {
    cores: Vec<TtCore>,
}

impl TtnSpec {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        let (first, last) = match (cores.first(), cores.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidArgument("tensor train needs at least one core".into())),
        };
        if first.left_rank != 1 || last.right_rank != 1 {
            return Err(Error::RankMismatch(format!(
                "boundary ranks must be 1, got {} and {}",
                first.left_rank, last.right_rank
            )));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].right_rank != pair[1].left_rank {
                return Err(Error::RankMismatch(format!(
                    "core {k} right rank {} != core {} left rank {}",
                    pair[0].right_rank,
                    k + 1,
                    pair[1].left_rank
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Random cores with entries `N(0, scale²)`.
    pub fn random(in_modes: &[usize], out_modes: &[usize], ranks: &[usize], scale: f64, rng: &mut Rng) -> Result<Self> {
        if in_modes.len() != out_modes.len() || ranks.len() + 1 != in_modes.len() {
            return Err(Error::InvalidArgument(
                "need K input modes, K output modes and K-1 inner ranks".into(),
            ));
        }
        let k = in_modes.len();
        let mut cores = Vec::with_capacity(k);
        for c in 0..k {
            let l = if c == 0 { 1 } else { ranks[c - 1] };
            let r = if c + 1 == k { 1 } else { ranks[c] };
            let len = l * in_modes[c] * out_modes[c] * r;
            let data = (0..len).map(|_| scale * standard_normal(rng)).collect();
            cores.push(TtCore::new(l, in_modes[c], out_modes[c], r, data)?);
        }
        Self::new(cores)
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn in_modes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.in_mode).collect()
    }

    pub fn out_modes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.out_mode).collect()
    }

    /// Product of the input modes.
    pub fn input_size(&self) -> usize {
        self.cores.iter().map(|c| c.in_mode).product()
    }

    /// Product of the output modes.
    pub fn output_dim(&self) -> usize {
        self.cores.iter().map(|c| c.out_mode).product()
    }

    pub fn num_params(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    /// Dense `output_dim × input_size` matrix, built by multiplying the core
    /// slices for every (input, output) multi-index. Exponential in the
    /// number of cores; meant for checks on small trains.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let in_modes = self.in_modes();
        let out_modes = self.out_modes();
        let n_in = self.input_size();
        let n_out = self.output_dim();
        let mut dense = vec![vec![0.0; n_in]; n_out];
        let mut i_idx = vec![0usize; in_modes.len()];
        let mut j_idx = vec![0usize; out_modes.len()];
        for (jo, row) in dense.iter_mut().enumerate() {
            unravel(jo, &out_modes, &mut j_idx);
            for (io, cell) in row.iter_mut().enumerate() {
                unravel(io, &in_modes, &mut i_idx);
                let mut v = vec![1.0];
                for (k, core) in self.cores.iter().enumerate() {
                    let mut next = vec![0.0; core.right_rank];
                    for (l, &vl) in v.iter().enumerate() {
                        for (r, n) in next.iter_mut().enumerate() {
                            *n += vl * core.at(l, i_idx[k], j_idx[k], r);
                        }
                    }
                    v = next;
                }
                *cell = v[0];
            }
        }
        dense
    }
}

fn unravel(mut flat: usize, modes: &[usize], out: &mut [usize]) {
    for (k, &m) in modes.iter().enumerate().rev() {
        out[k] = flat % m;
        flat /= m;
    }
}

/// Applies the TT map to a dense input, contracting one core at a time from
/// the left. Inputs shorter than [`TtnSpec::input_size`] are zero-padded.
pub fn ttn_forward(spec: &TtnSpec, x: &[f64]) -> Result<Vec<f64>> {
    let n_in = spec.input_size();
    if x.len() > n_in {
        return Err(Error::shape("tensor-train input length (max)", n_in, x.len()));
    }
    // Working tensor laid out as [rank][out_prefix][in_rest].
    let mut t = x.to_vec();
    t.resize(n_in, 0.0);
    let mut rank = 1;
    let mut out_prefix = 1;
    let mut in_rest = n_in;
    for core in spec.cores() {
        let n = core.in_mode;
        let m = core.out_mode;
        let r_next = core.right_rank;
        let rest = in_rest / n;
        let mut next = vec![0.0; r_next * out_prefix * m * rest];
        for l in 0..rank {
            for jp in 0..out_prefix {
                let src = &t[(l * out_prefix + jp) * in_rest..][..in_rest];
                for i in 0..n {
                    let src_i = &src[i * rest..][..rest];
                    for j in 0..m {
                        for r in 0..r_next {
                            let g = core.at(l, i, j, r);
                            if g == 0.0 {
                                continue;
                            }
                            let dst = &mut next[(r * out_prefix * m + jp * m + j) * rest..][..rest];
                            for (d, s) in dst.iter_mut().zip(src_i) {
                                *d += g * s;
                            }
                        }
                    }
                }
            }
        }
        t = next;
        rank = r_next;
        out_prefix *= m;
        in_rest = rest;
    }
    Ok(t)
}

/// Applies the TT map to the outer product `sites[0] ⊗ sites[1] ⊗ …` without
/// materializing it. `sites[k]` must have length equal to core `k`'s input
/// mode.
pub fn ttn_forward_product(spec: &TtnSpec, sites: &[&[f64]]) -> Result<Vec<f64>> {
    if sites.len() != spec.cores().len() {
        return Err(Error::shape("site count", spec.cores().len(), sites.len()));
    }
    // v laid out as [out_prefix][rank].
    let mut v = vec![1.0];
    let mut out_prefix = 1;
    for (core, site) in spec.cores().iter().zip(sites) {
        if site.len() != core.in_mode {
            return Err(Error::shape("site width", core.in_mode, site.len()));
        }
        let (lr, m, rr) = (core.left_rank, core.out_mode, core.right_rank);
        // Core contracted with the site vector: [l][j][r].
        let mut mixed = vec![0.0; lr * m * rr];
        for l in 0..lr {
            for (i, &s) in site.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                for j in 0..m {
                    for r in 0..rr {
                        mixed[(l * m + j) * rr + r] += s * core.at(l, i, j, r);
                    }
                }
            }
        }
        let mut next = vec![0.0; out_prefix * m * rr];
        for jp in 0..out_prefix {
            for l in 0..lr {
                let vl = v[jp * lr + l];
                if vl == 0.0 {
                    continue;
                }
                for j in 0..m {
                    for r in 0..rr {
                        next[(jp * m + j) * rr + r] += vl * mixed[(l * m + j) * rr + r];
                    }
                }
            }
        }
        v = next;
        out_prefix *= m;
    }
    Ok(v)
}

/// Windowed tensor train over the sites of a sequence input.
///
/// A `D = S·d` input is read as `S` sites of width `d`. One chain of `window`
/// cores is contracted against every run of `window` consecutive sites and
/// the results are summed:
///
/// ```text
/// out = Σ_p G_1(x_p) · G_2(x_{p+1}) ··· G_k(x_{p+k-1}) · Π_{q outside the run} s(x_q)
/// ```
///
/// with `G_j(x) = Σ_b x_b G_j[b]` and `s(x) = Σ_b x_b`, which is 1 for one-hot
/// sites. The first core is `1 × bond` and the last `bond × U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTensorTrain {
    site_width: usize,
    num_sites: usize,
    window: usize,
    bond: usize,
    output_dim: usize,
    /// Core `j` is `[site_width][left][right]`, row-major.
    cores: Vec<Vec<f64>>,
}

impl SiteTensorTrain {
    pub fn new(
        site_width: usize,
        num_sites: usize,
        window: usize,
        bond: usize,
        output_dim: usize,
        cores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if site_width == 0 || num_sites == 0 || window == 0 || bond == 0 || output_dim == 0 {
            return Err(Error::InvalidArgument("site tensor train with a zero dimension".into()));
        }
        if window > num_sites {
            return Err(Error::InvalidArgument(format!(
                "window of {window} sites is longer than the {num_sites}-site input"
            )));
        }
        if cores.len() != window {
            return Err(Error::shape("site tensor train core count", window, cores.len()));
        }
        let st = Self {
            site_width,
            num_sites,
            window,
            bond,
            output_dim,
            cores,
        };
        for (j, core) in st.cores.iter().enumerate() {
            let want = site_width * st.left(j) * st.right(j);
            if core.len() != want {
                return Err(Error::shape("site tensor train core", want, core.len()));
            }
        }
        Ok(st)
    }

    /// Square cores start at the identity; every entry gets `U(-0.1, 0.1)`.
    pub fn init(
        site_width: usize,
        num_sites: usize,
        window: usize,
        bond: usize,
        output_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        const NOISE: f64 = 0.1;
        let shell = Self {
            site_width,
            num_sites,
            window,
            bond,
            output_dim,
            cores: Vec::new(),
        };
        let cores = (0..window)
            .map(|j| {
                let (l, r) = (shell.left(j), shell.right(j));
                (0..site_width * l * r)
                    .map(|t| {
                        let (i, c) = ((t % (l * r)) / r, t % r);
                        let diag = if l == r && i == c { 1.0 } else { 0.0 };
                        diag + rng.gen_range(-NOISE..NOISE)
                    })
                    .collect()
            })
            .collect();
        Self::new(site_width, num_sites, window, bond, output_dim, cores)
    }

    pub fn site_width(&self) -> usize {
        self.site_width
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn bond(&self) -> usize {
        self.bond
    }

    pub fn input_dim(&self) -> usize {
        self.site_width * self.num_sites
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub(crate) fn params(&self) -> Vec<&[f64]> {
        self.cores.iter().map(Vec::as_slice).collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.cores.iter_mut().map(Vec::as_mut_slice).collect()
    }

    fn left(&self, j: usize) -> usize {
        if j == 0 {
            1
        } else {
            self.bond
        }
    }

    fn right(&self, j: usize) -> usize {
        if j + 1 == self.window {
            self.output_dim
        } else {
            self.bond
        }
    }

    /// `G_j(x)` as a row-major `left × right` matrix.
    fn site_matrix(&self, j: usize, site: &[f64]) -> Vec<f64> {
        let n = self.left(j) * self.right(j);
        let mut m = vec![0.0; n];
        for (b, &xb) in site.iter().enumerate() {
            if xb != 0.0 {
                for (mi, g) in m.iter_mut().zip(&self.cores[j][b * n..(b + 1) * n]) {
                    *mi += xb * g;
                }
            }
        }
        m
    }

    /// Product of `s(x_q)` over the sites outside each run.
    fn outside_factors(&self, x: &[f64]) -> Vec<f64> {
        let sums: Vec<f64> = x.chunks_exact(self.site_width).map(|s| s.iter().sum()).collect();
        let mut suffix = vec![1.0; self.num_sites + 1];
        for q in (0..self.num_sites).rev() {
            suffix[q] = suffix[q + 1] * sums[q];
        }
        let mut prefix = 1.0;
        let runs = self.num_sites - self.window + 1;
        let mut out = Vec::with_capacity(runs);
        for p in 0..runs {
            out.push(prefix * suffix[p + self.window]);
            prefix *= sums[p];
        }
        out
    }

    /// Row vectors `v_0 = [1], v_{j+1} = v_j · G_j(x_{p+j})` for the run at `p`.
    fn partials(&self, x: &[f64], p: usize) -> Vec<Vec<f64>> {
        let d = self.site_width;
        let mut v = vec![vec![1.0]];
        for j in 0..self.window {
            let m = self.site_matrix(j, &x[(p + j) * d..][..d]);
            let r = self.right(j);
            let prev = v.last().expect("seeded with [1]");
            let mut next = vec![0.0; r];
            for (i, &pi) in prev.iter().enumerate() {
                for (c, n) in next.iter_mut().enumerate() {
                    *n += pi * m[i * r + c];
                }
            }
            v.push(next);
        }
        v
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(
                "site tensor train input length",
                self.input_dim(),
                x.len(),
            ));
        }
        let mut out = vec![0.0; self.output_dim];
        for (p, w) in self.outside_factors(x).into_iter().enumerate() {
            let v = self.partials(x, p);
            for (o, vo) in out.iter_mut().zip(&v[self.window]) {
                *o += w * vo;
            }
        }
        Ok(out)
    }

    /// Forward pass plus gradient of `Σ_o grad_out[o]·out[o]` with respect to
    /// the cores, accumulated into `grads` (cores concatenated in order).
    pub(crate) fn forward_backward(
        &self,
        x: &[f64],
        head: impl FnOnce(&[f64]) -> Vec<f64>,
        grads: &mut [f64],
    ) -> Vec<f64> {
        let d = self.site_width;
        let factors = self.outside_factors(x);
        let runs: Vec<Vec<Vec<f64>>> = (0..factors.len()).map(|p| self.partials(x, p)).collect();
        let mut out = vec![0.0; self.output_dim];
        for (v, w) in runs.iter().zip(&factors) {
            for (o, vo) in out.iter_mut().zip(&v[self.window]) {
                *o += w * vo;
            }
        }
        let grad_out = head(&out);

        let mut offsets = Vec::with_capacity(self.window);
        let mut acc = 0;
        for core in &self.cores {
            offsets.push(acc);
            acc += core.len();
        }
        for (p, (v, w)) in runs.iter().zip(&factors).enumerate() {
            let mut right: Vec<f64> = grad_out.iter().map(|g| g * w).collect();
            for j in (0..self.window).rev() {
                let (l, r) = (self.left(j), self.right(j));
                let site = &x[(p + j) * d..][..d];
                for (b, &xb) in site.iter().enumerate() {
                    if xb == 0.0 {
                        continue;
                    }
                    let g = &mut grads[offsets[j] + b * l * r..][..l * r];
                    for i in 0..l {
                        let li = xb * v[j][i];
                        for c in 0..r {
                            g[i * r + c] += li * right[c];
                        }
                    }
                }
                let m = self.site_matrix(j, site);
                right = (0..l).map(|i| (0..r).map(|c| m[i * r + c] * right[c]).sum()).collect();
            }
        }
        out
    }

    /// The equivalent explicit [`TtnSpec`]: one core per site (input mode
    /// `site_width`, output mode 1) and a readout core (input mode 1, output
    /// mode `U`). The bond is a shift register holding a carry, one partial
    /// product per window stage and the running output.
    pub fn to_spec(&self) -> TtnSpec {
        let (d, b, u, k) = (self.site_width, self.bond, self.output_dim, self.window);
        let stage = |m: usize| 1 + (m - 1) * b;
        let out0 = 1 + (k - 1) * b;
        let w = out0 + u;
        let site_core = |left: usize| -> TtCore {
            let mut data = vec![0.0; left * d * w];
            let mut set = |l: usize, s: usize, r: usize, v: f64| {
                if l < left {
                    data[(l * d + s) * w + r] = v;
                }
            };
            for s in 0..d {
                set(0, s, 0, 1.0);
                for o in 0..u {
                    set(out0 + o, s, out0 + o, 1.0);
                }
                for j in 0..k {
                    let (l, r) = (self.left(j), self.right(j));
                    let from = if j == 0 { 0 } else { stage(j) };
                    let to = if j + 1 == k { out0 } else { stage(j + 1) };
                    for i in 0..l {
                        for c in 0..r {
                            set(from + i, s, to + c, self.cores[j][(s * l + i) * r + c]);
                        }
                    }
                }
            }
            TtCore::new(left, d, 1, w, data).expect("consistent site core shape")
        };
        let mut cores = Vec::with_capacity(self.num_sites + 1);
        cores.push(site_core(1));
        for _ in 1..self.num_sites {
            cores.push(site_core(w));
        }
        let mut readout = vec![0.0; w * u];
        for o in 0..u {
            readout[(out0 + o) * u + o] = 1.0;
        }
        cores.push(TtCore::new(w, 1, u, 1, readout).expect("consistent readout shape"));
        TtnSpec::new(cores).expect("site tensor train ranks are consistent")
    }
}
