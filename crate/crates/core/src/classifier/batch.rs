//! Bounded-concurrency batch classification with ordered output.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use super::client::{classify_pair, ChatEndpoint, ClassificationResult, RetryPolicy};
use super::journal::{fingerprint, Journal, JournalMode};
use super::prompt::ClassificationRequest;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BatchOptions<'a> {
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub journal: Option<(PathBuf, JournalMode)>,
    /// Once set, no new requests are dispatched.
    pub cancel: Option<&'a AtomicBool>,
}

impl Default for BatchOptions<'_> {
    fn default() -> Self {
        BatchOptions {
            max_in_flight: 8,
            retry: RetryPolicy::default(),
            journal: None,
            cancel: None,
        }
    }
}

#[derive(Debug)]
pub struct BatchItem {
    pub index: usize,
    pub outcome: Result<ClassificationResult>,
    /// Taken from the journal instead of the endpoint.
    pub resumed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub succeeded: usize,
    pub failed: usize,
    pub resumed: usize,
}

/// Classifies `requests`, handing each outcome to `sink` in request order.
///
/// At most `max_in_flight` requests are outstanding. A failed request is
/// reported through `sink` and does not stop the batch. With a journal,
/// successes are recorded as they complete and skipped on the next run.
pub fn classify_batch(
    endpoint: &dyn ChatEndpoint,
    model: &str,
    requests: &[ClassificationRequest],
    opts: &BatchOptions<'_>,
    mut sink: impl FnMut(BatchItem) -> Result<()>,
) -> Result<BatchSummary> {
    if opts.max_in_flight < 1 {
        return Err(Error::InvalidInput("max_in_flight must be at least 1".into()));
    }
    let n = requests.len();
    let (mut journal, mut done) = match &opts.journal {
        Some((path, mode)) => {
            let (j, d) = Journal::open(path, fingerprint(model, requests), n, *mode)?;
            (Some(j), d)
        }
        None => (None, BTreeMap::new()),
    };
    let pending: Vec<usize> = (0..n).filter(|i| !done.contains_key(i)).collect();
    let next = AtomicUsize::new(0);
    let halt = AtomicBool::new(false);
    let stopped = || halt.load(Ordering::SeqCst) || opts.cancel.is_some_and(|c| c.load(Ordering::SeqCst));

    let mut summary = BatchSummary::default();
    let mut first_error: Option<Error> = None;
    let mut cursor = 0;
    let mut buffer: BTreeMap<usize, Result<ClassificationResult>> = BTreeMap::new();

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..opts.max_in_flight.min(pending.len()) {
            let tx = tx.clone();
            let (next, pending, stopped) = (&next, &pending, &stopped);
            scope.spawn(move || {
                while !stopped() {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = pending.get(k) else { break };
                    let r = classify_pair(endpoint, model, &requests[i], &opts.retry);
                    if tx.send((i, r)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut emit = |cursor: &mut usize,
                        buffer: &mut BTreeMap<usize, Result<ClassificationResult>>,
                        done: &mut BTreeMap<usize, ClassificationResult>|
         -> Result<()> {
            while *cursor < n {
                let item = if let Some(r) = done.remove(cursor) {
                    summary.resumed += 1;
                    BatchItem {
                        index: *cursor,
                        outcome: Ok(r),
                        resumed: true,
                    }
                } else if let Some(outcome) = buffer.remove(cursor) {
                    match &outcome {
                        Ok(_) => summary.succeeded += 1,
                        Err(_) => summary.failed += 1,
                    }
                    BatchItem {
                        index: *cursor,
                        outcome,
                        resumed: false,
                    }
                } else {
                    break;
                };
                *cursor += 1;
                sink(item)?;
            }
            Ok(())
        };

        if let Err(e) = emit(&mut cursor, &mut buffer, &mut done) {
            halt.store(true, Ordering::SeqCst);
            first_error = Some(e);
        }
        for (i, r) in rx {
            if first_error.is_some() {
                continue;
            }
            let step = (|| {
                if let (Some(j), Ok(res)) = (journal.as_mut(), &r) {
                    j.append(i, res)?;
                }
                buffer.insert(i, r);
                emit(&mut cursor, &mut buffer, &mut done)
            })();
            if let Err(e) = step {
                halt.store(true, Ordering::SeqCst);
                first_error = Some(e);
            }
        }
    });

    if let Some(e) = first_error {
        return Err(e);
    }
    if cursor < n {
        let journaled = buffer.values().filter(|r| r.is_ok()).count();
        return Err(Error::Interrupted {
            completed: summary.succeeded + summary.resumed + journaled,
        });
    }
    Ok(summary)
}

/// [`classify_batch`] collected into a vector.
pub fn classify_batch_collect(
    endpoint: &dyn ChatEndpoint,
    model: &str,
    requests: &[ClassificationRequest],
    opts: &BatchOptions<'_>,
) -> Result<(Vec<BatchItem>, BatchSummary)> {
    let mut items = Vec::with_capacity(requests.len());
    let summary = classify_batch(endpoint, model, requests, opts, |item| {
        items.push(item);
        Ok(())
    })?;
    Ok((items, summary))
}
