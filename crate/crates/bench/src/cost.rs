//! Analytic byte and flop counts for the phases the harness times.
//!
//! Counts assume 8-byte reals, one read of every input and one write of every
//! output per phase, and leading-order flop terms.

use sketchla::SketchKind;

const B: u64 = 8;

/// Bytes and flops of a phase.
pub type Cost = (u64, u64);

/// Shape of the operator a run draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchShape {
    pub kind: SketchKind,
    pub d: usize,
    pub k1: usize,
    /// Second-stage dimension for the multisketch.
    pub k2: Option<usize>,
}

impl SketchShape {
    pub fn output_dim(&self) -> usize {
        self.k2.unwrap_or(self.k1)
    }

    fn d_pad(&self) -> u64 {
        self.d.next_power_of_two().max(2) as u64
    }

    /// Bytes of random data the operator stores.
    pub fn generation(&self) -> Cost {
        let (d, k1) = (self.d as u64, self.k1 as u64);
        let bytes = match self.kind {
            SketchKind::Gaussian => k1 * d * B,
            SketchKind::CountSketch => 5 * d,
            SketchKind::Srht => d + 4 * k1,
            SketchKind::MultiSketch => 5 * d + k1 * self.k2.unwrap_or(0) as u64 * B,
        };
        (bytes, 0)
    }

    /// Applying the operator to `cols` columns.
    pub fn apply(&self, cols: usize) -> Cost {
        let (d, k1, c) = (self.d as u64, self.k1 as u64, cols as u64);
        match self.kind {
            SketchKind::Gaussian => ((k1 * d + d * c + k1 * c) * B, 2 * k1 * d * c),
            SketchKind::CountSketch => (2 * d * c * B + 5 * d, d * c),
            SketchKind::Srht => {
                let dp = self.d_pad();
                let log = dp.trailing_zeros() as u64;
                ((d * c + k1 * c) * B + d, c * (dp * log + k1))
            }
            SketchKind::MultiSketch => {
                let k2 = self.k2.unwrap_or(0) as u64;
                (
                    2 * d * c * B + 5 * d + (k2 * k1 + k1 * c + k2 * c) * B,
                    d * c + 2 * k2 * k1 * c,
                )
            }
        }
    }

    /// Row-major to column-major copy of the input, for operators that need it.
    pub fn layout(&self, cols: usize) -> Cost {
        (2 * (self.d * cols) as u64 * B, 0)
    }
}

/// `AᵀA` for a `d × n` matrix.
pub fn gram(d: usize, n: usize) -> Cost {
    let (d, n) = (d as u64, n as u64);
    ((d * n + n * n) * B, 2 * d * n * n)
}

/// Householder QR of an `m × n` matrix.
pub fn qr(m: usize, n: usize) -> Cost {
    let (m, n) = (m as u64, n as u64);
    (
        2 * m * n * B,
        (2 * m * n * n).saturating_sub(2 * n * n * n / 3),
    )
}

/// Cost of one solver phase; `m` is the row count the phase works on.
pub fn solver_phase(phase: &str, d: usize, n: usize, sketch: Option<&SketchShape>) -> Cost {
    let (du, nu) = (d as u64, n as u64);
    let m = sketch.map_or(d, |s| s.output_dim());
    let mu = m as u64;
    match phase {
        "gram" => gram(d, n),
        "rhs" => ((du * nu + du + nu) * B, 2 * du * nu),
        "cholesky" => (2 * nu * nu * B, nu * nu * nu / 3),
        "sketch" => match sketch {
            Some(s) => {
                let (bytes, flops) = s.apply(n + 1);
                let extra = if s.kind == SketchKind::Srht {
                    s.layout(n).0
                } else {
                    0
                };
                (bytes + extra, flops)
            }
            None => (0, 0),
        },
        "qr" => qr(m, n),
        "apply-q" => ((mu * nu + 2 * mu) * B, 4 * mu * nu),
        "trsv" => ((nu * nu / 2 + 2 * nu) * B, nu * nu),
        "precondition" => ((2 * du * nu + nu * nu / 2) * B, du * nu * nu),
        "solves" if sketch.is_some() => (
            (du * nu + du + 2 * nu * nu) * B,
            2 * du * nu + nu * nu * nu / 3 + 2 * nu * nu,
        ),
        "solves" => ((nu * nu + 2 * nu) * B, 2 * nu * nu),
        _ => (0, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn countsketch_traffic_matches_single_pass_accounting() {
        let (d, n) = (1usize << 18, 128usize);
        let s = SketchShape {
            kind: SketchKind::CountSketch,
            d,
            k1: 2 * n * n,
            k2: None,
        };
        let (bytes, flops) = s.apply(n);
        let accounting = (2 * d * n) as f64 * 8.0;
        assert!((bytes as f64 / accounting - 1.0).abs() < 0.1);
        assert_eq!(flops, (d * n) as u64);
    }

    #[test]
    fn gram_dominates_countsketch_flops() {
        let (g, c) = (gram(1 << 16, 64).1, (1u64 << 16) * 64);
        assert_eq!(g / c, 128);
    }
}
