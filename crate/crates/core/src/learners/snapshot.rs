//! Versioned binary model files: `HHMODEL1`, a kind byte, then little-endian fields.

use std::collections::BTreeMap;

use super::{KnnModel, KnnParams, LearnError, NbModel, NbParams, RankerModel, TrainingExample};

const MAGIC: &[u8; 8] = b"HHMODEL1";
const KIND_NB: u8 = 1;
const KIND_KNN: u8 = 2;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn list(&mut self, v: &[u32]) {
        self.u32(v.len() as u32);
        v.iter().for_each(|&x| self.u32(x));
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LearnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LearnError::Snapshot("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, LearnError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, LearnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, LearnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, LearnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn list(&mut self) -> Result<Vec<u32>, LearnError> {
        let n = self.u32()? as usize;
        if n > self.bytes.len() {
            return Err(LearnError::Snapshot("list length out of range".into()));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

pub(super) fn encode(model: &RankerModel) -> Vec<u8> {
    let mut w = Writer(MAGIC.to_vec());
    match model {
        RankerModel::NaiveBayes(m) => {
            w.u8(KIND_NB);
            let p = m.params;
            for x in [p.w_prior, p.w_hit, p.w_miss, p.miss_penalty] {
                w.f64(x);
            }
            w.u32(m.label_count.len() as u32);
            for (&l, &t) in &m.label_count {
                w.u32(l);
                w.u32(t);
                let row = m.cooc.get(&l);
                w.u32(row.map_or(0, |r| r.len()) as u32);
                for (&f, &c) in row.into_iter().flatten() {
                    w.u32(f);
                    w.u32(c);
                }
            }
        }
        RankerModel::Knn(m) => {
            w.u8(KIND_KNN);
            w.u64(m.params.k as u64);
            w.f64(m.params.self_weight);
            w.u8(m.params.dudani as u8);
            w.u32(m.examples.len() as u32);
            for ex in &m.examples {
                w.u32(ex.label);
                w.list(&ex.features);
                w.list(&ex.deps);
            }
        }
    }
    w.0
}

pub(super) fn decode(bytes: &[u8]) -> Result<RankerModel, LearnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(LearnError::Snapshot("bad magic".into()));
    }
    let model = match r.u8()? {
        KIND_NB => {
            let params = NbParams { w_prior: r.f64()?, w_hit: r.f64()?, w_miss: r.f64()?, miss_penalty: r.f64()? };
            let n = r.u32()?;
            let mut label_count = BTreeMap::new();
            let mut cooc = BTreeMap::new();
            for _ in 0..n {
                let l = r.u32()?;
                label_count.insert(l, r.u32()?);
                let k = r.u32()?;
                let mut row = BTreeMap::new();
                for _ in 0..k {
                    let f = r.u32()?;
                    row.insert(f, r.u32()?);
                }
                if !row.is_empty() {
                    cooc.insert(l, row);
                }
            }
            RankerModel::NaiveBayes(NbModel::from_counts(params, label_count, cooc))
        }
        KIND_KNN => {
            let params = KnnParams { k: r.u64()? as usize, self_weight: r.f64()?, dudani: r.u8()? != 0 };
            let n = r.u32()?;
            let mut m = KnnModel::new(params);
            for _ in 0..n {
                let label = r.u32()?;
                let features = r.list()?;
                let deps = r.list()?;
                m.add_example(&TrainingExample { label, features, deps });
            }
            RankerModel::Knn(m)
        }
        k => return Err(LearnError::Snapshot(format!("unknown model kind {}", k))),
    };
    if r.pos != bytes.len() {
        return Err(LearnError::Snapshot("trailing bytes".into()));
    }
    Ok(model)
}
