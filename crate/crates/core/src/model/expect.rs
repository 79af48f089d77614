//! Expectations under a product of per-agent distributions.
//!
//! `E[V(s')]` with `s' ~ prod_n p_n` is computed by contracting the value
//! tensor one agent axis at a time, most significant agent first. Rows with a
//! single unit mass only shift the read offset, so deterministic kernels cost
//! `O(N)` instead of `O(|S|)`.

/// One factor of a product distribution over substates.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Row<'a> {
    Dist(&'a [f64]),
    Point(usize),
}

/// Reusable contraction buffers, one per worker.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
    pub(crate) digits: Vec<usize>,
    pub(crate) controls: Vec<usize>,
}

impl Scratch {
    pub fn new(states: usize, agents: usize, clusters: usize) -> Self {
        Self {
            a: vec![0.0; states],
            b: vec![0.0; states],
            digits: vec![0; agents],
            controls: vec![0; clusters],
        }
    }
}

#[derive(Clone, Copy)]
enum Src {
    Values,
    A,
    B,
}

#[inline]
fn unit_mass(p: &[f64]) -> Option<usize> {
    let j = p.iter().position(|&x| x != 0.0)?;
    (p[j] == 1.0 && p[j + 1..].iter().all(|&x| x == 0.0)).then_some(j)
}

/// `sum_{s'} prod_n row_n(s'_n) * values[s']` over a mixed-radix space.
pub(crate) fn contract<'a>(
    values: &[f64],
    radices: &[usize],
    row: impl Fn(usize) -> Row<'a>,
    scratch: &mut Scratch,
) -> f64 {
    let mut len = values.len();
    let mut off = 0;
    let mut src = Src::Values;
    for n in (0..radices.len()).rev() {
        let block = len / radices[n];
        let p = match row(n) {
            Row::Point(j) => {
                off += j * block;
                len = block;
                continue;
            }
            Row::Dist(p) => match unit_mass(p) {
                Some(j) => {
                    off += j * block;
                    len = block;
                    continue;
                }
                None => p,
            },
        };
        let (input, output, next): (&[f64], &mut [f64], Src) = match src {
            Src::Values => (values, &mut scratch.a[..], Src::A),
            Src::A => (&scratch.a[..], &mut scratch.b[..], Src::B),
            Src::B => (&scratch.b[..], &mut scratch.a[..], Src::A),
        };
        let out = &mut output[..block];
        let mut first = true;
        for (j, &pj) in p.iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            let chunk = &input[off + j * block..off + (j + 1) * block];
            if first {
                for (o, &x) in out.iter_mut().zip(chunk) {
                    *o = pj * x;
                }
                first = false;
            } else {
                for (o, &x) in out.iter_mut().zip(chunk) {
                    *o += pj * x;
                }
            }
        }
        if first {
            out.fill(0.0);
        }
        src = next;
        off = 0;
        len = block;
    }
    match src {
        Src::Values => values[off],
        Src::A => scratch.a[off],
        Src::B => scratch.b[off],
    }
}
