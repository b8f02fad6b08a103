//! Memory-bounded batch prefetching: a producer thread fills a bounded
//! staging buffer from disk, drains it into a bounded queue and consumers
//! take batches from the queue front.
//!
//! At any instant the batches resident in memory are capped by
//! `queue_limit + buffer_limit + producers` (the trailing term is batches
//! under construction), so the training process never holds the dataset in
//! RAM; only the manifest index does. The producer cycle mirrors the
//! buffer-then-queue stacking scheme: load at most one batch into the
//! staging buffer if it has room, move buffered batches into the queue
//! until the queue is full, then wait. The wait is condition-variable based
//! with a `poll_interval` timeout rather than an unconditional sleep; the
//! observable bounds and FIFO ordering are unchanged, only idle spinning is
//! avoided.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::io::read_ply;
use crate::manifest::DatasetManifest;
use crate::sampler::{sample_batch, Batch, Modality};

#[derive(Debug, Error)]
pub enum PipeError {
    #[error("invalid pipe config: {0}")]
    InvalidConfig(String),
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("manifest references missing files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFiles(Vec<PathBuf>),
    #[error("timed out waiting for a batch")]
    Timeout,
    #[error("pipe is shut down")]
    Closed,
    #[error("producer failed: {0}")]
    ProducerFailed(String),
}

/// Prefetch pipeline parameters. `queue_limit` and `buffer_limit` cap the
/// batches resident in RAM; `io_delay` injects artificial per-frame disk
/// latency for benchmarking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeConfig {
    pub queue_limit: usize,
    pub buffer_limit: usize,
    pub poll_interval: Duration,
    pub sample_size: usize,
    pub modality: Modality,
    pub rng_seed: u64,
    pub producers: usize,
    pub io_delay: Duration,
}

impl Default for PipeConfig {
    fn default() -> Self {
        PipeConfig {
            queue_limit: 4,
            buffer_limit: 2,
            poll_interval: Duration::from_millis(10),
            sample_size: 8192,
            modality: Modality::RgbD,
            rng_seed: 0,
            producers: 1,
            io_delay: Duration::ZERO,
        }
    }
}

impl PipeConfig {
    pub fn validate(&self) -> Result<(), PipeError> {
        if self.queue_limit < 1 {
            return Err(PipeError::InvalidConfig("queue_limit must be >= 1".into()));
        }
        if self.buffer_limit < 1 {
            return Err(PipeError::InvalidConfig("buffer_limit must be >= 1".into()));
        }
        if self.poll_interval <= Duration::ZERO {
            return Err(PipeError::InvalidConfig("poll_interval must be positive".into()));
        }
        if self.sample_size < 1 {
            return Err(PipeError::InvalidConfig("sample_size must be >= 1".into()));
        }
        if self.producers < 1 {
            return Err(PipeError::InvalidConfig("producers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Counters exposed by [`BatchPipe::stats`]. `produced`, `consumed` and
/// `discarded` are monotone; at quiescence
/// `produced - consumed - discarded == queue_depth + buffer_depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipeStats {
    pub batches_produced: u64,
    pub batches_consumed: u64,
    pub batches_discarded: u64,
    pub queue_depth: usize,
    pub buffer_depth: usize,
    /// High-water mark of queued + buffered + under-construction batches.
    pub peak_resident_batches: usize,
}

struct PipeState {
    queue: VecDeque<Batch>,
    buffer: Vec<Batch>,
    shut_down: bool,
    resident: usize,
    produced: u64,
    consumed: u64,
    discarded: u64,
    peak_resident: usize,
    /// Next position in the shuffled frame cycle.
    cursor: u64,
    error: Option<String>,
}

impl PipeState {
    fn bump_resident(&mut self) {
        self.resident += 1;
        self.peak_resident = self.peak_resident.max(self.resident);
    }
}

struct Shared {
    state: Mutex<PipeState>,
    /// Signaled when a batch lands in the queue (consumers wait on this).
    available: Condvar,
    /// Signaled when queue space frees up or shutdown starts (producers
    /// wait on this).
    space: Condvar,
}

/// Handle to a running prefetch pipeline. Cloneable and shareable; the
/// producer threads stop when [`BatchPipe::shutdown`] is called or the last
/// handle is dropped.
pub struct BatchPipe {
    shared: Arc<Shared>,
    workers: Arc<Workers>,
}

impl Clone for BatchPipe {
    fn clone(&self) -> Self {
        BatchPipe {
            shared: Arc::clone(&self.shared),
            workers: Arc::clone(&self.workers),
        }
    }
}

struct Workers {
    shared: Arc<Shared>,
    handles: Mutex<Vec<JoinHandle<()>>>,
}

impl Workers {
    fn shutdown(&self) {
        {
            let mut state = lock(&self.shared.state);
            if !state.shut_down {
                state.shut_down = true;
            }
        }
        self.shared.available.notify_all();
        self.shared.space.notify_all();
        let handles: Vec<_> = lock_handles(&self.handles).drain(..).collect();
        for handle in handles {
            let _ = handle.join();
        }
        // Whatever is still staged or queued is discarded.
        let mut state = lock(&self.shared.state);
        let dropped = state.queue.len() + state.buffer.len();
        state.queue.clear();
        state.buffer.clear();
        state.discarded += dropped as u64;
        state.resident -= dropped;
    }
}

impl Drop for Workers {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn lock<'a>(m: &'a Mutex<PipeState>) -> MutexGuard<'a, PipeState> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn lock_handles<'a>(m: &'a Mutex<Vec<JoinHandle<()>>>) -> MutexGuard<'a, Vec<JoinHandle<()>>> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// One frame reference held by the RAM-resident index.
struct FrameRef {
    path: PathBuf,
    frame_id: String,
    taxonomy: String,
}

impl BatchPipe {
    /// Validates the manifest, spawns the producer(s) and starts
    /// prefetching immediately. Frames are visited in a seeded shuffled
    /// order that cycles forever.
    pub fn start(manifest: &DatasetManifest, config: PipeConfig) -> Result<BatchPipe, PipeError> {
        config.validate()?;
        if manifest.is_empty() {
            return Err(PipeError::EmptyManifest);
        }
        let mut missing = Vec::new();
        let mut frames = Vec::with_capacity(manifest.len());
        for entry in manifest.entries() {
            let path = manifest.resolve(&entry.ply);
            if !path.exists() {
                missing.push(path.clone());
            }
            frames.push(FrameRef {
                path,
                frame_id: entry.frame_id.clone(),
                taxonomy: entry.taxonomy.clone(),
            });
        }
        if !missing.is_empty() {
            return Err(PipeError::MissingFiles(missing));
        }

        // Seeded shuffled visiting order, cycled by all producers.
        let order = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
            let mut order: Vec<usize> = (0..frames.len()).collect();
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            order
        };

        let shared = Arc::new(Shared {
            state: Mutex::new(PipeState {
                queue: VecDeque::new(),
                buffer: Vec::new(),
                shut_down: false,
                resident: 0,
                produced: 0,
                consumed: 0,
                discarded: 0,
                peak_resident: 0,
                cursor: 0,
                error: None,
            }),
            available: Condvar::new(),
            space: Condvar::new(),
        });

        let frames = Arc::new(frames);
        let order = Arc::new(order);
        let mut handles = Vec::with_capacity(config.producers);
        for _ in 0..config.producers {
            let shared = Arc::clone(&shared);
            let frames = Arc::clone(&frames);
            let order = Arc::clone(&order);
            handles.push(std::thread::spawn(move || {
                producer_loop(&shared, &frames, &order, &config);
            }));
        }

        let workers = Arc::new(Workers {
            shared: Arc::clone(&shared),
            handles: Mutex::new(handles),
        });
        Ok(BatchPipe { shared, workers })
    }

    /// Removes and returns the oldest queued batch, blocking up to
    /// `timeout`.
    pub fn get_batch(&self, timeout: Duration) -> Result<Batch, PipeError> {
        let deadline = Instant::now() + timeout;
        let mut state = lock(&self.shared.state);
        loop {
            if state.shut_down {
                return Err(PipeError::Closed);
            }
            if let Some(message) = &state.error {
                return Err(PipeError::ProducerFailed(message.clone()));
            }
            if let Some(batch) = state.queue.pop_front() {
                state.consumed += 1;
                state.resident -= 1;
                drop(state);
                self.shared.space.notify_all();
                return Ok(batch);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(PipeError::Timeout);
            }
            let (next, _) = self
                .shared
                .available
                .wait_timeout(state, deadline - now)
                .unwrap_or_else(|poisoned| poisoned.into_inner());
            state = next;
        }
    }

    pub fn stats(&self) -> PipeStats {
        let state = lock(&self.shared.state);
        PipeStats {
            batches_produced: state.produced,
            batches_consumed: state.consumed,
            batches_discarded: state.discarded,
            queue_depth: state.queue.len(),
            buffer_depth: state.buffer.len(),
            peak_resident_batches: state.peak_resident,
        }
    }

    /// Stops the producers and discards staged batches. Idempotent; after
    /// shutdown every `get_batch` returns [`PipeError::Closed`].
    pub fn shutdown(&self) {
        self.workers.shutdown();
    }
}

fn producer_loop(
    shared: &Shared,
    frames: &[FrameRef],
    order: &[usize],
    config: &PipeConfig,
) {
    loop {
        // Claim one construction slot if the buffer has room.
        let claim = {
            let mut state = lock(&shared.state);
            if state.shut_down {
                return;
            }
            if state.buffer.len() + in_flight(&state, config) < config.buffer_limit {
                state.bump_resident();
                let seq = state.cursor;
                state.cursor += 1;
                Some(seq)
            } else {
                None
            }
        };

        let mut made_progress = false;
        if let Some(seq) = claim {
            // Load and sample outside the lock; this is the slow part.
            let frame = &frames[order[(seq % order.len() as u64) as usize]];
            if !config.io_delay.is_zero() {
                std::thread::sleep(config.io_delay);
            }
            let result = read_ply(&frame.path).map(|cloud| {
                let cloud = cloud.with_taxonomy(frame.taxonomy.clone());
                sample_batch(
                    &cloud,
                    config.sample_size,
                    config.rng_seed.wrapping_add(seq),
                    config.modality,
                )
            });
            let mut state = lock(&shared.state);
            match result {
                Ok(Ok(mut batch)) => {
                    batch.source_frame = frame.frame_id.clone();
                    if state.shut_down {
                        state.resident -= 1;
                        state.produced += 1;
                        state.discarded += 1;
                        return;
                    }
                    state.buffer.push(batch);
                    state.produced += 1;
                    made_progress = true;
                }
                Ok(Err(err)) => {
                    state.resident -= 1;
                    state.error = Some(err.to_string());
                    drop(state);
                    shared.available.notify_all();
                    return;
                }
                Err(err) => {
                    state.resident -= 1;
                    state.error = Some(format!("{}: {err}", frame.path.display()));
                    drop(state);
                    shared.available.notify_all();
                    return;
                }
            }
        }

        // Drain the staging buffer into the queue until the queue is full.
        {
            let mut state = lock(&shared.state);
            if state.shut_down {
                return;
            }
            let mut moved = 0;
            while state.queue.len() < config.queue_limit && !state.buffer.is_empty() {
                let batch = state.buffer.remove(0);
                state.queue.push_back(batch);
                moved += 1;
            }
            if moved > 0 {
                made_progress = true;
                drop(state);
                shared.available.notify_all();
            }
        }

        // Nothing to do: wait for queue space or shutdown, at most one poll
        // interval.
        if !made_progress {
            let state = lock(&shared.state);
            if state.shut_down {
                return;
            }
            let _ = shared
                .space
                .wait_timeout(state, config.poll_interval)
                .unwrap_or_else(|poisoned| poisoned.into_inner());
        }
    }
}

/// Batches currently being constructed by producers: resident minus queued
/// minus buffered.
fn in_flight(state: &PipeState, _config: &PipeConfig) -> usize {
    state.resident - state.queue.len() - state.buffer.len()
}

/// Throughput comparison between the prefetched pipeline and a synchronous
/// load-then-sample loop, both paying the same injected `io_delay` per
/// frame load and the same `consumer_work` per batch.
#[derive(Debug, Clone, Copy)]
pub struct PipeBenchReport {
    pub batches: usize,
    pub prefetched_batches_per_sec: f64,
    pub synchronous_batches_per_sec: f64,
}

impl PipeBenchReport {
    pub fn speedup(&self) -> f64 {
        self.prefetched_batches_per_sec / self.synchronous_batches_per_sec
    }
}

/// Runs both loops over the same manifest and measures batches/second.
/// `consumer_work` models the per-batch training step that the prefetched
/// pipeline can overlap with disk latency.
pub fn bench_prefetch(
    manifest: &DatasetManifest,
    config: PipeConfig,
    batches: usize,
    consumer_work: Duration,
) -> Result<PipeBenchReport, PipeError> {
    config.validate()?;
    if manifest.is_empty() {
        return Err(PipeError::EmptyManifest);
    }

    // Synchronous baseline: load + sample + train, strictly sequential.
    let entries = manifest.entries();
    let sync_start = Instant::now();
    for i in 0..batches {
        let entry = &entries[i % entries.len()];
        if !config.io_delay.is_zero() {
            std::thread::sleep(config.io_delay);
        }
        let cloud = read_ply(&manifest.resolve(&entry.ply))
            .map_err(|e| PipeError::ProducerFailed(e.to_string()))?
            .with_taxonomy(entry.taxonomy.clone());
        let _batch = sample_batch(&cloud, config.sample_size, config.rng_seed + i as u64, config.modality)
            .map_err(|e| PipeError::ProducerFailed(e.to_string()))?;
        if !consumer_work.is_zero() {
            std::thread::sleep(consumer_work);
        }
    }
    let sync_elapsed = sync_start.elapsed();

    // Prefetched: the producer hides the disk latency behind consumer work.
    let pipe = BatchPipe::start(manifest, config)?;
    let pre_start = Instant::now();
    for _ in 0..batches {
        let _batch = pipe.get_batch(Duration::from_secs(60))?;
        if !consumer_work.is_zero() {
            std::thread::sleep(consumer_work);
        }
    }
    let pre_elapsed = pre_start.elapsed();
    pipe.shutdown();

    Ok(PipeBenchReport {
        batches,
        prefetched_batches_per_sec: batches as f64 / pre_elapsed.as_secs_f64(),
        synchronous_batches_per_sec: batches as f64 / sync_elapsed.as_secs_f64(),
    })
}
