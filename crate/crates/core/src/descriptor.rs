//! `name[:key=value[,key=value]*]` descriptor strings, as used by
//! [`Misfit`](crate::Misfit) and [`Regularizer`](crate::Regularizer).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;

pub(crate) struct Descriptor<'a> {
    input: &'a str,
    pub name: &'a str,
    params: Vec<(&'a str, &'a str)>,
}

impl<'a> Descriptor<'a> {
    pub fn parse(input: &'a str) -> Result<Self, Error> {
        let input = input.trim();
        let (name, rest) = match input.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (input, None),
        };
        if name.is_empty() {
            return Err(parse_error(input, "empty name"));
        }
        let mut params = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| parse_error(input, "expected key=value"))?;
                params.push((k.trim(), v.trim()));
            }
        }
        Ok(Self { input, name, params })
    }

    pub fn error(&self, reason: &str) -> Error {
        parse_error(self.input, reason)
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, Error> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| self.error(&alloc::format!("`{key}` is not a number")))
            })
            .transpose()
    }

    pub fn required_f64(&self, key: &str) -> Result<f64, Error> {
        self.f64(key)?
            .ok_or_else(|| self.error(&alloc::format!("missing `{key}`")))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, Error> {
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| self.error(&alloc::format!("`{key}` is not an index")))
            })
            .transpose()
    }

    pub fn str(&self, key: &str) -> Option<&'a str> {
        self.raw(key)
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<(), Error> {
        match self.params.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(self.error(&alloc::format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn parse_error(input: &str, reason: &str) -> Error {
    Error::Parse {
        input: String::from(input),
        reason: reason.to_string(),
    }
}
