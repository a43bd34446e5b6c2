//! Gray-mapped square QAM alphabets with unit average energy.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// An ordered modulation alphabet `a_0 … a_{Q-1}`.
///
/// Symbol index `j` carries the bit tuple given by the binary expansion of
/// `j` (most significant bit first). The in-phase rail holds the upper half of
/// the bits and the quadrature rail the lower half, each Gray-coded onto a
/// PAM ladder, so neighbouring points differ in exactly one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModAlphabet {
    symbols: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl ModAlphabet {
    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbol(&self, index: usize) -> Complex64 {
        self.symbols[index]
    }

    /// Bit tuple of symbol `index`, MSB first.
    pub fn bits_of(&self, index: usize) -> Vec<u8> {
        let b = self.bits_per_symbol;
        (0..b).map(|i| ((index >> (b - 1 - i)) & 1) as u8).collect()
    }

    /// Symbol index carrying `bits` (MSB first).
    pub fn index_of(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::Dimension(format!(
                "expected {} bits, got {}",
                self.bits_per_symbol,
                bits.len()
            )));
        }
        Ok(bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    /// Bit `bit` (MSB = 0) of symbol `index`.
    #[inline]
    pub fn bit(&self, index: usize, bit: usize) -> u8 {
        ((index >> (self.bits_per_symbol - 1 - bit)) & 1) as u8
    }

    pub fn mean_energy(&self) -> f64 {
        self.symbols.iter().map(|a| a.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// Index of the nearest constellation point (lowest index on ties).
    pub fn hard_decision(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, a) in self.symbols.iter().enumerate() {
            let d = (y - a).norm_sqr();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Number of differing bits between two symbol indices.
    pub fn bit_distance(&self, a: usize, b: usize) -> u32 {
        ((a ^ b) as u32).count_ones()
    }
}

/// Gray-mapped QPSK `[(1+j), (1-j), (-1+j), (-1-j)] / √2`.
pub fn make_qpsk_gray() -> ModAlphabet {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ModAlphabet {
        symbols: vec![
            Complex64::new(s, s),
            Complex64::new(s, -s),
            Complex64::new(-s, s),
            Complex64::new(-s, -s),
        ],
        bits_per_symbol: 2,
    }
}

/// Gray-mapped square QAM of order 4, 16 or 64, unit average energy.
pub fn make_qam(order: usize) -> Result<ModAlphabet> {
    let rail_bits = match order {
        4 => 1,
        16 => 2,
        64 => 3,
        _ => {
            return Err(Error::config(
                "alphabet.order",
                format!("unsupported QAM order {order} (expected 4, 16 or 64)"),
            ))
        }
    };
    let levels = 1usize << rail_bits;
    // Gray word -> PAM amplitude; ladder position 0 is the most positive level.
    let mut amplitude = vec![0.0; levels];
    for pos in 0..levels {
        let gray = pos ^ (pos >> 1);
        amplitude[gray] = (levels as f64 - 1.0) - 2.0 * pos as f64;
    }
    let mut symbols: Vec<Complex64> = (0..order)
        .map(|j| Complex64::new(amplitude[j >> rail_bits], amplitude[j & (levels - 1)]))
        .collect();
    let energy = symbols.iter().map(|a| a.norm_sqr()).sum::<f64>() / order as f64;
    let scale = energy.sqrt().recip();
    for a in &mut symbols {
        *a *= scale;
    }
    Ok(ModAlphabet {
        symbols,
        bits_per_symbol: 2 * rail_bits,
    })
}
