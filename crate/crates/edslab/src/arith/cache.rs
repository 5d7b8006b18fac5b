use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{factor_with_seed, ArithError, Factorization};

/// Memo of factorizations, persisted as `n factorization` text lines.
///
/// Lookups return exactly what `factor_with_seed` would, so concurrent use
/// in any interleaving yields identical answers.
#[derive(Debug, Default)]
pub struct FactorCache {
    seed: u64,
    map: Mutex<HashMap<BigInt, Factorization>>,
}

impl FactorCache {
    pub fn new(seed: u64) -> Self {
        FactorCache { seed, map: Mutex::new(HashMap::new()) }
    }

    pub fn factor(&self, n: &BigInt) -> Factorization {
        if let Some(f) = self.map.lock().unwrap().get(n) {
            return f.clone();
        }
        let f = factor_with_seed(n, self.seed);
        self.map.lock().unwrap().insert(n.clone(), f.clone());
        f
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads cache lines, rejecting any entry whose product is not `n`.
    pub fn load(&self, path: &Path) -> Result<usize, CacheError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e.into()),
        };
        let mut map = self.map.lock().unwrap();
        let mut count = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || CacheError::BadLine(i + 1);
            let (n, f) = line.split_once(' ').ok_or_else(bad)?;
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let f = Factorization::parse(f)?;
            if n.is_zero() || f.value() != n {
                return Err(bad());
            }
            map.insert(n, f);
            count += 1;
        }
        Ok(count)
    }

    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let map = self.map.lock().unwrap();
        let mut keys: Vec<&BigInt> = map.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            out.push_str(&format!("{} {}\n", k, map[k].to_cache_string()));
        }
        fs::write(path, out)?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed cache line {0}")]
    BadLine(usize),
    #[error(transparent)]
    Parse(#[from] ArithError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_is_transparent() {
        let c = FactorCache::new(1);
        let n = BigInt::from(-1647240);
        assert_eq!(c.factor(&n), super::super::factor(&n));
        assert_eq!(c.factor(&n), super::super::factor(&n));
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn cache_roundtrip_file() {
        let dir = std::env::temp_dir().join(format!("edslab-cache-{}", std::process::id()));
        let c = FactorCache::new(1);
        c.factor(&BigInt::from(-1961));
        c.factor(&BigInt::from(360));
        c.save(&dir).unwrap();
        let d = FactorCache::new(1);
        assert_eq!(d.load(&dir).unwrap(), 2);
        assert_eq!(d.factor(&BigInt::from(360)).to_string(), "2^3 * 3^2 * 5");
        std::fs::write(&dir, "12 2^2 * 5\n").unwrap();
        assert!(FactorCache::new(1).load(&dir).is_err());
        std::fs::remove_file(&dir).ok();
    }
}
