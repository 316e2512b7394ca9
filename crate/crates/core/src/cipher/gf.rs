//! Binary field arithmetic for the MixColumns layers.

/// Product in GF(2^width) reduced by `poly` (which includes the x^width term).
pub(crate) const fn mul(mut a: u8, mut b: u8, poly: u16, width: u32) -> u8 {
    let top = 1u16 << width;
    let mut acc = 0u16;
    let mut x = a as u16;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= x;
        }
        x <<= 1;
        if x & top != 0 {
            x ^= poly;
        }
        b >>= 1;
    }
    a = acc as u8;
    a
}

/// `matrix * column` over GF(2^width).
pub(crate) fn mat_vec(matrix: &[[u8; 4]; 4], col: [u8; 4], poly: u16, width: u32) -> [u8; 4] {
    let mut out = [0u8; 4];
    for (o, row) in out.iter_mut().zip(matrix) {
        *o = row
            .iter()
            .zip(col)
            .fold(0, |acc, (&m, c)| acc ^ mul(m, c, poly, width));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aes_field_examples() {
        // FIPS-197 4.2: {57} * {83} = {c1}, {57} * {13} = {fe}
        assert_eq!(mul(0x57, 0x83, 0x11b, 8), 0xc1);
        assert_eq!(mul(0x57, 0x13, 0x11b, 8), 0xfe);
    }

    #[test]
    fn gf16_has_inverses() {
        for a in 1..16u8 {
            assert_eq!((1..16u8).filter(|&b| mul(a, b, 0x13, 4) == 1).count(), 1);
        }
    }
}
