//! Differentiable primitives: 2-d convolution (3x3 pad 1 and 1x1), ELU,
//! tanh, fully-connected, and elementwise addition for skip connections.
//!
//! Parameters live in a central [`ParamStore`]; layers hold indices into it.
//! Backward passes write into a detached [`Grads`] buffer so batch items can
//! be processed on worker threads against a shared immutable model.

use super::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// One named parameter tensor.
#[derive(Debug, Clone)]
pub struct Param<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct ParamStore<S> {
    pub params: Vec<Param<S>>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> ParamStore<S> {
        ParamStore { params: Vec::new() }
    }

    pub fn add(&mut self, name: String, shape: Vec<usize>, values: Vec<S>) -> usize {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.params.push(Param {
            name,
            shape,
            values,
        });
        self.params.len() - 1
    }

    pub fn values(&self, id: usize) -> &[S] {
        &self.params[id].values
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradient buffers aligned with a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Grads<S> {
    pub bufs: Vec<Vec<S>>,
}

impl<S: Scalar> Grads<S> {
    pub fn zeros_like(store: &ParamStore<S>) -> Grads<S> {
        Grads {
            bufs: store
                .params
                .iter()
                .map(|p| vec![S::ZERO; p.values.len()])
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Grads<S>) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: S) {
        for buf in &mut self.bufs {
            for x in buf.iter_mut() {
                *x *= factor;
            }
        }
    }
}

/// C x 8 x 8 activation tensor.
#[derive(Debug, Clone)]
pub struct Planes<S> {
    pub channels: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Planes<S> {
    pub fn zeros(channels: usize) -> Planes<S> {
        Planes {
            channels,
            data: vec![S::ZERO; channels * 64],
        }
    }

    pub fn from_stack(stack: &crate::encoding::PlaneStack) -> Planes<S> {
        Planes {
            channels: stack.channels,
            data: stack.data.iter().map(|&v| S::from_f64(v as f64)).collect(),
        }
    }

    pub fn channel(&self, c: usize) -> &[S] {
        &self.data[c * 64..(c + 1) * 64]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [S] {
        &mut self.data[c * 64..(c + 1) * 64]
    }
}

fn he_uniform<S: Scalar>(rng: &mut ChaCha12Rng, n: usize, fan_in: usize) -> Vec<S> {
    let limit = (6.0 / fan_in as f64).sqrt();
    (0..n)
        .map(|_| S::from_f64(rng.random_range(-limit..limit)))
        .collect()
}

fn fc_uniform<S: Scalar>(rng: &mut ChaCha12Rng, n: usize, fan_in: usize) -> Vec<S> {
    let limit = 1.0 / (fan_in as f64).sqrt();
    (0..n)
        .map(|_| S::from_f64(rng.random_range(-limit..limit)))
        .collect()
}

/// 2-d convolution over 8x8 planes; kernel 3 (zero padding 1) or 1.
#[derive(Debug, Clone)]
pub struct Conv {
    pub wid: usize,
    pub bid: usize,
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
}

impl Conv {
    pub fn new<S: Scalar>(
        store: &mut ParamStore<S>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
    ) -> Conv {
        assert!(kernel == 1 || kernel == 3);
        let fan_in = in_c * kernel * kernel;
        let wid = store.add(
            format!("{name}.weight"),
            vec![out_c, in_c, kernel, kernel],
            he_uniform(rng, out_c * fan_in, fan_in),
        );
        let bid = store.add(format!("{name}.bias"), vec![out_c], vec![S::ZERO; out_c]);
        Conv {
            wid,
            bid,
            in_c,
            out_c,
            kernel,
        }
    }

    fn offsets(&self) -> &'static [(i32, i32)] {
        if self.kernel == 3 {
            &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 0),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ]
        } else {
            &[(0, 0)]
        }
    }

    pub fn forward<S: Scalar>(&self, store: &ParamStore<S>, x: &Planes<S>) -> Planes<S> {
        debug_assert_eq!(x.channels, self.in_c);
        let w = store.values(self.wid);
        let b = store.values(self.bid);
        let kk = self.kernel * self.kernel;
        let mut y = Planes::zeros(self.out_c);
        for o in 0..self.out_c {
            y.channel_mut(o).fill(b[o]);
        }
        for i in 0..self.in_c {
            let xc = x.channel(i);
            // Binary inputs are mostly empty planes; skipping them is the
            // main cost saving on the 1850-channel first layer.
            if xc.iter().all(|v| v.is_zero()) {
                continue;
            }
            for o in 0..self.out_c {
                let wbase = (o * self.in_c + i) * kk;
                let yc = y.channel_mut(o);
                for (t, &(dr, dc)) in self.offsets().iter().enumerate() {
                    let wv = w[wbase + t];
                    if wv.is_zero() {
                        continue;
                    }
                    shift_mac(yc, xc, dr, dc, wv);
                }
            }
        }
        y
    }

    /// Accumulates weight/bias grads; returns input grads unless the layer
    /// sits directly on the data.
    pub fn backward<S: Scalar>(
        &self,
        store: &ParamStore<S>,
        x: &Planes<S>,
        dy: &Planes<S>,
        grads: &mut Grads<S>,
        need_dx: bool,
    ) -> Option<Planes<S>> {
        let kk = self.kernel * self.kernel;
        let w = store.values(self.wid);
        {
            let db = &mut grads.bufs[self.bid];
            for o in 0..self.out_c {
                db[o] += dy.channel(o).iter().copied().sum();
            }
        }
        {
            let dw = &mut grads.bufs[self.wid];
            for i in 0..self.in_c {
                let xc = x.channel(i);
                if xc.iter().all(|v| v.is_zero()) {
                    continue;
                }
                for o in 0..self.out_c {
                    let wbase = (o * self.in_c + i) * kk;
                    let dyc = dy.channel(o);
                    for (t, &(dr, dc)) in self.offsets().iter().enumerate() {
                        dw[wbase + t] += shift_dot(dyc, xc, dr, dc);
                    }
                }
            }
        }
        if !need_dx {
            return None;
        }
        let mut dx = Planes::zeros(self.in_c);
        for i in 0..self.in_c {
            let dxc = dx.channel_mut(i);
            for o in 0..self.out_c {
                let wbase = (o * self.in_c + i) * kk;
                let dyc = dy.channel(o);
                for (t, &(dr, dc)) in self.offsets().iter().enumerate() {
                    let wv = w[wbase + t];
                    if wv.is_zero() {
                        continue;
                    }
                    // y[r][c] += w * x[r+dr][c+dc]  =>  dx[r+dr][c+dc] += w * dy[r][c]
                    shift_mac(dxc, dyc, -dr, -dc, wv);
                }
            }
        }
        Some(dx)
    }
}

/// dst[r][c] += wv * src[r+dr][c+dc] over valid indices of an 8x8 plane.
fn shift_mac<S: Scalar>(dst: &mut [S], src: &[S], dr: i32, dc: i32, wv: S) {
    let r0 = (-dr).max(0) as usize;
    let r1 = (8 - dr).min(8) as usize;
    let c0 = (-dc).max(0) as usize;
    let c1 = (8 - dc).min(8) as usize;
    for r in r0..r1 {
        let src_row = (r as i32 + dr) * 8;
        let dst_row = r * 8;
        for c in c0..c1 {
            dst[dst_row + c] += wv * src[(src_row + c as i32 + dc) as usize];
        }
    }
}

/// sum over valid (r, c) of a[r][c] * b[r+dr][c+dc].
fn shift_dot<S: Scalar>(a: &[S], b: &[S], dr: i32, dc: i32) -> S {
    let r0 = (-dr).max(0) as usize;
    let r1 = (8 - dr).min(8) as usize;
    let c0 = (-dc).max(0) as usize;
    let c1 = (8 - dc).min(8) as usize;
    let mut acc = S::ZERO;
    for r in r0..r1 {
        let b_row = (r as i32 + dr) * 8;
        let a_row = r * 8;
        for c in c0..c1 {
            acc += a[a_row + c] * b[(b_row + c as i32 + dc) as usize];
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Fc {
    pub wid: usize,
    pub bid: usize,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Fc {
    pub fn new<S: Scalar>(
        store: &mut ParamStore<S>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Fc {
        let wid = store.add(
            format!("{name}.weight"),
            vec![out_dim, in_dim],
            fc_uniform(rng, out_dim * in_dim, in_dim),
        );
        let bid = store.add(format!("{name}.bias"), vec![out_dim], vec![S::ZERO; out_dim]);
        Fc {
            wid,
            bid,
            in_dim,
            out_dim,
        }
    }

    pub fn forward<S: Scalar>(&self, store: &ParamStore<S>, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.in_dim);
        let w = store.values(self.wid);
        let b = store.values(self.bid);
        (0..self.out_dim)
            .map(|o| {
                let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                b[o] + row.iter().zip(x).map(|(&wv, &xv)| wv * xv).sum::<S>()
            })
            .collect()
    }

    pub fn backward<S: Scalar>(
        &self,
        store: &ParamStore<S>,
        x: &[S],
        dy: &[S],
        grads: &mut Grads<S>,
    ) -> Vec<S> {
        let w = store.values(self.wid);
        {
            let db = &mut grads.bufs[self.bid];
            for o in 0..self.out_dim {
                db[o] += dy[o];
            }
            let dw = &mut grads.bufs[self.wid];
            for o in 0..self.out_dim {
                let row = &mut dw[o * self.in_dim..(o + 1) * self.in_dim];
                let g = dy[o];
                for (slot, &xv) in row.iter_mut().zip(x) {
                    *slot += g * xv;
                }
            }
        }
        let mut dx = vec![S::ZERO; self.in_dim];
        for o in 0..self.out_dim {
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            let g = dy[o];
            for (slot, &wv) in dx.iter_mut().zip(row) {
                *slot += g * wv;
            }
        }
        dx
    }
}

pub fn elu<S: Scalar>(x: S) -> S {
    if x > S::ZERO {
        x
    } else {
        x.exp() - S::ONE
    }
}

/// Derivative of ELU expressed through its output: 1 for y > 0, y + 1 below.
pub fn elu_grad_from_output<S: Scalar>(y: S) -> S {
    if y > S::ZERO {
        S::ONE
    } else {
        y + S::ONE
    }
}

pub fn elu_planes<S: Scalar>(x: &Planes<S>) -> Planes<S> {
    Planes {
        channels: x.channels,
        data: x.data.iter().map(|&v| elu(v)).collect(),
    }
}

/// dy scaled elementwise by ELU's derivative, given the forward output.
pub fn elu_backward<S: Scalar>(y: &Planes<S>, dy: &Planes<S>) -> Planes<S> {
    Planes {
        channels: dy.channels,
        data: dy
            .data
            .iter()
            .zip(&y.data)
            .map(|(&g, &yv)| g * elu_grad_from_output(yv))
            .collect(),
    }
}

pub fn add_planes<S: Scalar>(a: &Planes<S>, b: &Planes<S>) -> Planes<S> {
    debug_assert_eq!(a.channels, b.channels);
    Planes {
        channels: a.channels,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect(),
    }
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    S::ONE / (S::ONE + (-x).exp())
}
