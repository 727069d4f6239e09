//! Theory-vs-method labelling of (paper, top reference) pairs through a
//! chat-completions endpoint, scored by the option-token probability.

mod batch;
mod client;
mod journal;
pub mod mock;
mod prompt;

pub use batch::{classify_batch, classify_batch_collect, BatchItem, BatchOptions, BatchSummary};
pub use client::{
    classify_pair, extract_result, normalize_token, request_body, token_positions, ChatEndpoint,
    ClassificationResult, HttpEndpoint, RetryPolicy, TokenPosition, API_KEY_ENV, MAX_TOKENS, TOP_LOGPROBS,
};
pub use journal::{fingerprint, Journal, JournalMode};
pub use prompt::{
    build_prompt, ClassificationRequest, PromptMode, CONCRETE_WORDING_TEMPLATE, FEW_SHOT_EXEMPLARS,
    THREE_OPTION_TEMPLATE, ZERO_SHOT_TEMPLATE,
};
