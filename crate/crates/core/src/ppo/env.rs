//! Environment interface and the vectorized runner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SimError;

/// Summary of a finished episode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpisodeEnd {
    pub reward: f64,
    pub length: usize,
    /// Outcome fed to the curriculum; `None` when the start does not count.
    pub success: Option<bool>,
    /// Task error of the finished episode, when measured.
    pub error: Option<f64>,
    pub terminated_by: Option<&'static str>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub done: bool,
    /// Set on the step that finished an episode; the env has already reset.
    pub episode: Option<EpisodeEnd>,
}

/// Single environment with automatic reset. Actions lie in `[-1, 1]`.
pub trait Env: Send {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<(), SimError>;
    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<Step, SimError>;
}

/// A batch of environments, each with its own random stream, so results do
/// not depend on the worker count.
pub struct VecEnv<E> {
    pub envs: Vec<E>,
    rngs: Vec<ChaCha8Rng>,
    pub obs: Vec<f64>,
    pub parallel: bool,
}

impl<E: Env> VecEnv<E> {
    pub fn new(envs: Vec<E>, seed: u64, parallel: bool) -> Self {
        let rngs = (0..envs.len())
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64 + 1);
                r
            })
            .collect();
        let dim = envs.first().map_or(0, |e| e.obs_dim());
        let obs = vec![0.0; envs.len() * dim];
        Self { envs, rngs, obs, parallel }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.envs.first().map_or(0, |e| e.obs_dim())
    }

    pub fn act_dim(&self) -> usize {
        self.envs.first().map_or(0, |e| e.act_dim())
    }

    pub fn reset_all(&mut self) -> Result<(), (usize, SimError)> {
        let od = self.obs_dim();
        let f = |(i, ((e, r), o)): (usize, ((&mut E, &mut ChaCha8Rng), &mut [f64]))| e.reset(r, o).map_err(|err| (i, err));
        let it = self.envs.iter_mut().zip(self.rngs.iter_mut()).zip(self.obs.chunks_mut(od.max(1)));
        if self.parallel {
            let v: Vec<_> = self.envs.iter_mut().zip(self.rngs.iter_mut()).zip(self.obs.chunks_mut(od.max(1))).collect();
            v.into_par_iter().enumerate().try_for_each(f)
        } else {
            it.enumerate().try_for_each(f)
        }
    }

    /// Steps every env with its row of `actions`; `steps[i]` receives the result.
    pub fn step(&mut self, actions: &[f64], steps: &mut [Step]) -> Result<(), (usize, SimError)> {
        let (od, ad) = (self.obs_dim().max(1), self.act_dim().max(1));
        let f = |(i, (((e, r), o), (a, s))): (usize, (((&mut E, &mut ChaCha8Rng), &mut [f64]), (&[f64], &mut Step)))| {
            *s = e.step(a, r, o).map_err(|err| (i, err))?;
            Ok(())
        };
        let zipped = self
            .envs
            .iter_mut()
            .zip(self.rngs.iter_mut())
            .zip(self.obs.chunks_mut(od))
            .zip(actions.chunks(ad).zip(steps.iter_mut()));
        if self.parallel {
            zipped.collect::<Vec<_>>().into_par_iter().enumerate().try_for_each(f)
        } else {
            zipped.enumerate().try_for_each(f)
        }
    }
}
