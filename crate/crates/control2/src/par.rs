//! Data-parallel map with a sequential fallback.
//!
//! The verification grid is embarrassingly parallel: levels and checks share
//! only immutable inputs. With the `parallel` feature (default) the work
//! fans out over rayon; without it the same call runs on one thread. Output
//! order matches input order either way, so reports are identical.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex, RwLock};

use crate::error::Result;

/// Per-key build-once memoization. Concurrent requests for the same key
/// block on the first builder instead of duplicating the work; requests for
/// distinct keys proceed independently. Build errors are returned to every
/// waiter and not cached.
pub struct Memo<K, V> {
    map: RwLock<HashMap<K, Arc<Mutex<Option<V>>>>>,
}

impl<K: Eq + Hash + Clone, V: Clone> Default for Memo<K, V> {
    fn default() -> Self {
        Memo {
            map: RwLock::new(HashMap::new()),
        }
    }
}

impl<K: Eq + Hash + Clone, V: Clone> Memo<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_try<F: FnOnce() -> Result<V>>(&self, key: K, build: F) -> Result<V> {
        let slot = {
            let mut guard = self.map.write().expect("memo lock");
            guard
                .entry(key)
                .or_insert_with(|| Arc::new(Mutex::new(None)))
                .clone()
        };
        let mut cell = slot.lock().expect("memo slot lock");
        if let Some(v) = &*cell {
            return Ok(v.clone());
        }
        let v = build()?;
        *cell = Some(v.clone());
        Ok(v)
    }
}
