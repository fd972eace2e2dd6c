/// 16-bit one's-complement Internet checksum.
///
/// Big-endian 16-bit words are summed with end-around carry; an odd trailing
/// byte is padded with a zero low byte; the folded sum is complemented.
pub fn checksum_16(bytes: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    let mut chunks = bytes.chunks_exact(2);
    for pair in &mut chunks {
        sum += u32::from(u16::from_be_bytes([pair[0], pair[1]]));
    }
    if let [last] = chunks.remainder() {
        sum += u32::from(*last) << 8;
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference: accumulate in u64 over byte pairs, fold once at the end.
    fn reference(bytes: &[u8]) -> u16 {
        let mut total: u64 = 0;
        for (i, b) in bytes.iter().enumerate() {
            total += if i % 2 == 0 { (*b as u64) << 8 } else { *b as u64 };
        }
        while total >> 16 != 0 {
            total = (total & 0xFFFF) + (total >> 16);
        }
        !(total as u16)
    }

    #[test]
    fn empty_and_zero_payloads() {
        assert_eq!(checksum_16(&[]), 0xFFFF);
        for len in [2, 4, 10, 500] {
            assert_eq!(checksum_16(&vec![0u8; len]), 0xFFFF);
        }
    }

    #[test]
    fn rfc1071_worked_example() {
        // RFC 1071 §3: words 0001 f203 f4f5 f6f7 sum to ddf2 → checksum 220d
        assert_eq!(checksum_16(&[0x00, 0x01, 0xf2, 0x03, 0xf4, 0xf5, 0xf6, 0xf7]), 0x220d);
    }

    #[test]
    fn matches_reference_on_random_payloads() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let len = rng.random_range(0..700);
            let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            assert_eq!(checksum_16(&data), reference(&data));
        }
    }

    #[test]
    fn every_single_bit_flip_changes_checksum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let len = rng.random_range(1..600);
            let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            let good = checksum_16(&data);
            for bit in 0..len * 8 {
                let mut bad = data.clone();
                bad[bit / 8] ^= 1 << (bit % 8);
                assert_ne!(checksum_16(&bad), good, "bit {bit} of {len}");
            }
        }
    }
}
