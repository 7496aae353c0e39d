//! Self-delimiting codewords for stopping indices.
//!
//! The dummy message is the single bit `0`. Index `j >= 1` is `1` followed
//! by the Elias gamma code of `j`: `bits(j) - 1` zeros (a unary length
//! header) and then the `bits(j)` binary digits of `j`, most significant
//! first. The codeword of `j` has `2 floor(log2 j) + 2` bits.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::{Error, Result};

/// A decoded message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Dummy,
    Index(BigUint),
}

/// A bit string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Codeword(pub Vec<bool>);

impl Codeword {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

pub fn dummy_codeword() -> Codeword {
    Codeword(alloc::vec![false])
}

/// Codeword of index `j >= 1`.
pub fn prefix_free_encode(j: &BigUint) -> Result<Codeword> {
    if j.is_zero() {
        return Err(Error::Parameter("index 0 is reserved for the dummy message".into()));
    }
    let n = j.bits();
    let mut out = Vec::with_capacity(2 * n as usize);
    out.push(true);
    out.extend(core::iter::repeat_n(false, (n - 1) as usize));
    out.extend((0..n).rev().map(|i| j.bit(i)));
    Ok(Codeword(out))
}

pub fn encode_message(m: &Message) -> Result<Codeword> {
    match m {
        Message::Dummy => Ok(dummy_codeword()),
        Message::Index(j) => prefix_free_encode(j),
    }
}

/// Length of the codeword of `j >= 1` without building it.
pub fn codeword_len(j: &BigUint) -> u64 {
    2 * j.bits()
}

/// Decodes one message from the front of `bits`, returning it and the
/// number of bits consumed.
pub fn prefix_free_decode(bits: &[bool]) -> Result<(Message, usize)> {
    let truncated = || Error::Parameter("bit string ends inside a codeword".into());
    match bits.first() {
        None => Err(truncated()),
        Some(false) => Ok((Message::Dummy, 1)),
        Some(true) => {
            let zeros = bits[1..].iter().take_while(|&&b| !b).count();
            let start = 1 + zeros;
            let end = start + zeros + 1;
            if bits.len() < end {
                return Err(truncated());
            }
            let mut j = BigUint::zero();
            for &b in &bits[start..end] {
                j <<= 1u8;
                if b {
                    j |= BigUint::from(1u8);
                }
            }
            Ok((Message::Index(j), end))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn big(j: u64) -> BigUint {
        BigUint::from(j)
    }

    #[test]
    fn small_codewords() {
        assert_eq!(dummy_codeword().to_string(), "0");
        assert_eq!(prefix_free_encode(&big(1)).unwrap().to_string(), "11");
        assert_eq!(prefix_free_encode(&big(5)).unwrap().to_string(), "100101");
        assert!(prefix_free_encode(&big(0)).is_err());
        let (m, used) = prefix_free_decode(prefix_free_encode(&big(5)).unwrap().bits()).unwrap();
        assert_eq!((m, used), (Message::Index(big(5)), 6));
        assert!(prefix_free_decode(&[true, false, false, true]).is_err());
    }

    /// Exhaustive length sweep against `2 floor(log2 j) + 3`.
    #[test]
    fn lengths_up_to_2_pow_16() {
        for j in 1u64..=1 << 16 {
            let c = prefix_free_encode(&big(j)).unwrap();
            let floor_log = 63 - j.leading_zeros() as usize;
            assert!(c.len() < 2 * floor_log + 3);
            assert_eq!(c.len() as u64, codeword_len(&big(j)));
        }
    }

    /// No codeword is a proper prefix of another (dummy included).
    #[test]
    fn prefix_free_over_small_range() {
        let mut words: Vec<Codeword> = (1u64..=300).map(|j| prefix_free_encode(&big(j)).unwrap()).collect();
        words.push(dummy_codeword());
        for a in &words {
            for b in &words {
                if a != b {
                    assert!(!(a.len() <= b.len() && b.bits()[..a.len()] == a.bits()[..]));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn concatenations_decode(js in prop::collection::vec(prop::option::of(1u64..u64::MAX), 1..20)) {
            let msgs: Vec<Message> = js.iter().map(|j| match j {
                None => Message::Dummy,
                Some(j) => Message::Index(big(*j)),
            }).collect();
            let mut stream = Vec::new();
            for m in &msgs {
                stream.extend(encode_message(m).unwrap().0);
            }
            let mut at = 0;
            for m in &msgs {
                let (got, used) = prefix_free_decode(&stream[at..]).unwrap();
                prop_assert_eq!(&got, m);
                at += used;
            }
            prop_assert_eq!(at, stream.len());
        }

        #[test]
        fn huge_indices_round_trip(shift in 60u32..400, low in any::<u32>()) {
            let j = (BigUint::from(1u8) << shift) + big(u64::from(low));
            let c = prefix_free_encode(&j).unwrap();
            prop_assert_eq!(c.len() as u64, 2 * (shift as u64 + 1));
            prop_assert_eq!(prefix_free_decode(c.bits()).unwrap().0, Message::Index(j));
        }
    }
}
