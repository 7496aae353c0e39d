//! Protocol compression: simultaneous messages and round by round.

pub mod code;
mod rounds;
mod simul;

pub use code::{codeword_len, dummy_codeword, prefix_free_decode, prefix_free_encode, Codeword, Message};
pub use rounds::{
    compress_multiround, expected_codeword_bits, extracted_comm_bits, transcript_bits, AbortReason, CoinOutcome,
    CoinRealization, CompressedRound, MultiCompressionReport, RoundCompressionState, RoundReport, Run, Slot,
    DEFAULT_COIN_BUDGET,
};
pub use simul::{
    compress_simultaneous, index_bits, sample_support, simul_bit_bound, support_length, PartyCompression,
    SimulCompressionReport, SupportSample, DEFAULT_RETRIES,
};

#[cfg(test)]
mod tests;
