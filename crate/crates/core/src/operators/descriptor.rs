//! Plain-text operator descriptors, e.g.
//! `compose(outer=bernoulli(m=128,n=256,seed=7),inner=integration(n=256,scale=1.0))`.
//!
//! Floats are written in shortest round-trip form, so parsing a descriptor
//! rebuilds a bit-identical operator.

use std::collections::BTreeMap;

use super::LinearMap;
use crate::basis::WaveletBasis;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::Matrix;

impl LinearMap {
    pub fn to_descriptor(&self) -> String {
        match self {
            LinearMap::Dense(m) => {
                let data: Vec<String> = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| format!("{:?}", m[(i, j)]))
                    .collect();
                format!(
                    "dense(rows={},cols={},data=[{}])",
                    m.nrows(),
                    m.ncols(),
                    data.join(" ")
                )
            }
            LinearMap::Identity(n) => format!("identity(n={n})"),
            LinearMap::Integration(op) => {
                format!("integration(n={},scale={:?})", op.dim(), op.scale())
            }
            LinearMap::Bernoulli(b) => {
                format!("bernoulli(m={},n={},seed={})", b.rows(), b.cols(), b.seed())
            }
            LinearMap::Composed(c) => format!(
                "compose(outer={},inner={})",
                c.outer().to_descriptor(),
                c.inner().to_descriptor()
            ),
            LinearMap::Product(p) => format!(
                "product(w={},a={})",
                p.w().to_descriptor(),
                p.a().to_descriptor()
            ),
            LinearMap::Restricted(r) => format!(
                "restrict(op={},omega={},basis={})",
                r.inner().to_descriptor(),
                r.omega(),
                if r.basis().is_some() { "db2" } else { "none" }
            ),
        }
    }

    pub fn from_descriptor(text: &str) -> Result<Self> {
        let mut parser = Parser {
            src: text.trim().as_bytes(),
            pos: 0,
        };
        let map = parser.operator()?;
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing characters"));
        }
        Ok(map)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

enum Value {
    Text(String),
    Op(LinearMap),
}

impl<'a> Parser<'a> {
    fn error(&self, what: &str) -> Error {
        Error::Descriptor(format!("{what} at byte {}", self.pos))
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn operator(&mut self) -> Result<LinearMap> {
        let name = self.ident()?;
        self.expect(b'(')?;
        let mut args = BTreeMap::new();
        if self.src.get(self.pos) != Some(&b')') {
            loop {
                let key = self.ident()?;
                self.expect(b'=')?;
                let value = self.value()?;
                args.insert(key, value);
                match self.src.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    _ => break,
                }
            }
        }
        self.expect(b')')?;
        build(&name, args)
    }

    fn value(&mut self) -> Result<Value> {
        match self.src.get(self.pos) {
            Some(b'[') => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != b']' {
                    self.pos += 1;
                }
                self.expect(b']')?;
                Ok(Value::Text(
                    String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
                ))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                // Either a nested operator or a bare word such as `db2`/`none`.
                let save = self.pos;
                let word = self.ident()?;
                if self.src.get(self.pos) == Some(&b'(') {
                    self.pos = save;
                    Ok(Value::Op(self.operator()?))
                } else {
                    Ok(Value::Text(word))
                }
            }
            _ => {
                let start = self.pos;
                while self.pos < self.src.len() && !matches!(self.src[self.pos], b',' | b')') {
                    self.pos += 1;
                }
                Ok(Value::Text(
                    String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
                ))
            }
        }
    }
}

fn take_text(args: &mut BTreeMap<String, Value>, key: &str) -> Result<String> {
    match args.remove(key) {
        Some(Value::Text(t)) => Ok(t),
        Some(Value::Op(_)) => Err(Error::Descriptor(format!("'{key}' must be a scalar"))),
        None => Err(Error::Descriptor(format!("missing '{key}'"))),
    }
}

fn take_op(args: &mut BTreeMap<String, Value>, key: &str) -> Result<LinearMap> {
    match args.remove(key) {
        Some(Value::Op(op)) => Ok(op),
        Some(Value::Text(_)) => Err(Error::Descriptor(format!("'{key}' must be an operator"))),
        None => Err(Error::Descriptor(format!("missing '{key}'"))),
    }
}

fn take_num<T: std::str::FromStr>(args: &mut BTreeMap<String, Value>, key: &str) -> Result<T> {
    let t = take_text(args, key)?;
    t.parse()
        .map_err(|_| Error::Descriptor(format!("cannot parse '{key}' from '{t}'")))
}

fn list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.trim_start_matches('[')
        .trim_end_matches(']')
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Descriptor(format!("bad list element '{s}'")))
        })
        .collect()
}

fn build(name: &str, mut args: BTreeMap<String, Value>) -> Result<LinearMap> {
    let map = match name {
        "identity" => LinearMap::identity(take_num(&mut args, "n")?),
        "integration" => {
            LinearMap::integration_scaled(take_num(&mut args, "n")?, take_num(&mut args, "scale")?)
        }
        "bernoulli" => LinearMap::bernoulli(
            take_num(&mut args, "m")?,
            take_num(&mut args, "n")?,
            take_num(&mut args, "seed")?,
        ),
        "dense" => {
            let rows: usize = take_num(&mut args, "rows")?;
            let cols: usize = take_num(&mut args, "cols")?;
            let data: Vec<f64> = list(&take_text(&mut args, "data")?)?;
            if data.len() != rows * cols {
                return Err(Error::Descriptor(format!(
                    "dense data has {} entries, expected {}",
                    data.len(),
                    rows * cols
                )));
            }
            LinearMap::dense(Matrix::from_row_slice(rows, cols, &data))
        }
        "compose" => {
            let outer = take_op(&mut args, "outer")?;
            let inner = take_op(&mut args, "inner")?;
            LinearMap::compose(outer, inner)?
        }
        "product" => {
            let w = take_op(&mut args, "w")?;
            let a = take_op(&mut args, "a")?;
            LinearMap::product(w, a)?
        }
        "restrict" => {
            let op = take_op(&mut args, "op")?;
            let omega: IndexSet = list::<usize>(&take_text(&mut args, "omega")?)?.into();
            let basis = match take_text(&mut args, "basis")?.as_str() {
                "db2" => Some(WaveletBasis::db2(op.domain_dim())?),
                "none" => None,
                other => return Err(Error::Descriptor(format!("unknown basis '{other}'"))),
            };
            LinearMap::restrict(&op, &omega, basis.as_ref())?
        }
        other => {
            return Err(Error::Descriptor(format!(
                "unknown operator kind '{other}'"
            )))
        }
    };
    if let Some(key) = args.keys().next() {
        return Err(Error::Descriptor(format!(
            "unexpected argument '{key}' for {name}"
        )));
    }
    Ok(map)
}
