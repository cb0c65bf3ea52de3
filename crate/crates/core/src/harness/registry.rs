//! Method names understood by the command line.
//!
//! | name                         | method                                         |
//! |------------------------------|------------------------------------------------|
//! | `MR-NPRK2-[ssp2-{m}x]`       | second order, `gamma = (2 - sqrt 2)/2`         |
//! | `MR-NPRK2p-[ssp2-{m}x]`      | second order, `gamma = (2 + sqrt 2)/2`         |
//! | `MR-NPRK3-1[ssp3-{m}x]`      | third order variant 1, `omega = 2`             |
//! | `MR-NPRK3-2[ssp3-{m}x]`      | third order variant 2, `omega = 2`             |
//! | `ssp2-[{m}x]`, `ssp3-[{m}x]` | composite explicit SSP methods                 |
//! | `MR1-unstable-{s2}`          | first order, fully coupled                     |
//! | `MR1-lstable-{s2}`           | first order, L-stable in the stiff limit       |
//! | `MR1-example`                | the four-stage first-order example             |
//! | `*.json`                     | tensor or tableau file                         |
//!
//! The bracketed base may be `ssp2-{m}x` or `ssp3-{m}x` for either
//! multirate family. Third-order names accept a `:w1` suffix selecting
//! `omega = 1`, and every multirate name accepts `:generic` to run the
//! tensor-driven reference stepper instead of the specialised one.

use std::path::Path;

use crate::error::{Error, Result};
use crate::integrate::Stepper;
use crate::methods::{
    first_order_example, first_order_lstable, first_order_unstable, mr2, mr3, ssp2, ssp3, Mr2Branch, Mr3Variant,
};
use crate::tableau::{compose, ButcherTableau, NprkTensor, TableauJson, TensorJson};
use crate::verify::{classical_order_of, order_of, DEFAULT_TOL};

/// A resolved method: its tensor, the stepper used to run it, and its order.
#[derive(Clone, Debug)]
pub struct Method {
    pub name: String,
    pub tensor: NprkTensor,
    pub stepper: Stepper,
    pub order: usize,
}

fn usage(name: &str, why: &str) -> Error {
    Error::Usage(format!("unknown method `{name}`: {why}"))
}

fn parse_count(s: &str, name: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(m) if m >= 1 => Ok(m),
        _ => Err(usage(name, &format!("`{s}` is not a positive integer"))),
    }
}

/// Parses `ssp2-{m}x` / `ssp3-{m}x`.
fn parse_base(spec: &str, name: &str) -> Result<ButcherTableau> {
    let (base, rest) = spec
        .split_once('-')
        .ok_or_else(|| usage(name, "expected `<base>-<m>x`"))?;
    let m = rest
        .strip_suffix('x')
        .ok_or_else(|| usage(name, "composition count must end in `x`"))?;
    let m = parse_count(m, name)?;
    let t = match base {
        "ssp2" => ssp2(),
        "ssp3" => ssp3(),
        _ => return Err(usage(name, &format!("unknown base method `{base}`"))),
    };
    Ok(compose(&t, m))
}

fn bracketed<'a>(s: &'a str, name: &str) -> Result<&'a str> {
    s.strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| usage(name, "expected a bracketed base method"))
}

fn from_json_file(path: &Path, name: &str) -> Result<Method> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("A").is_some() {
        let doc: TableauJson = serde_json::from_value(value)?;
        let tab = ButcherTableau::from_json(&doc)?;
        return Ok(Method {
            name: name.to_string(),
            tensor: NprkTensor::from_classical(&tab),
            order: classical_order_of(&tab, DEFAULT_TOL),
            stepper: Stepper::Classical(tab),
        });
    }
    let doc: TensorJson = serde_json::from_value(value)?;
    let tensor = NprkTensor::from_json(&doc)?;
    Ok(Method {
        name: name.to_string(),
        order: order_of(&tensor, DEFAULT_TOL).order,
        stepper: Stepper::Generic(tensor.clone()),
        tensor,
    })
}

/// Resolves a method name or a JSON file path.
pub fn resolve(name: &str) -> Result<Method> {
    if name.ends_with(".json") {
        return from_json_file(Path::new(name), name);
    }
    let mut base = name;
    let mut omega = 2;
    let mut generic = false;
    while let Some((head, flag)) = base.rsplit_once(':') {
        match flag {
            "w1" => omega = 1,
            "w2" => omega = 2,
            "generic" => generic = true,
            _ => return Err(usage(name, &format!("unknown suffix `:{flag}`"))),
        }
        base = head;
    }

    let (tensor, stepper, order) = if let Some(rest) = base
        .strip_prefix("MR-NPRK2-")
        .or_else(|| base.strip_prefix("MR-NPRK2m-"))
    {
        let (t, c) = mr2(&parse_base(bracketed(rest, name)?, name)?, Mr2Branch::Minus)?;
        (t, Stepper::Mr2(c), 2)
    } else if let Some(rest) = base.strip_prefix("MR-NPRK2p-") {
        let (t, c) = mr2(&parse_base(bracketed(rest, name)?, name)?, Mr2Branch::Plus)?;
        (t, Stepper::Mr2(c), 2)
    } else if let Some(rest) = base.strip_prefix("MR-NPRK3-1") {
        let (t, c) = mr3(&parse_base(bracketed(rest, name)?, name)?, omega, Mr3Variant::V1)?;
        (t, Stepper::Mr3(c), 3)
    } else if let Some(rest) = base.strip_prefix("MR-NPRK3-2") {
        let (t, c) = mr3(&parse_base(bracketed(rest, name)?, name)?, omega, Mr3Variant::V2)?;
        (t, Stepper::Mr3(c), 3)
    } else if let Some(rest) = base.strip_prefix("MR1-unstable-") {
        let t = first_order_unstable(parse_count(rest, name)?)?;
        (t.clone(), Stepper::Generic(t), 1)
    } else if let Some(rest) = base.strip_prefix("MR1-lstable-") {
        let t = first_order_lstable(parse_count(rest, name)?)?;
        (t.clone(), Stepper::Generic(t), 1)
    } else if base == "MR1-example" {
        let t = first_order_example();
        (t.clone(), Stepper::Generic(t), 1)
    } else if base.starts_with("ssp2-") || base.starts_with("ssp3-") {
        let (head, rest) = base.split_at(5);
        let inner = bracketed(rest, name)?;
        let tab = parse_base(&format!("{head}{inner}"), name)?;
        let order = classical_order_of(&tab, DEFAULT_TOL);
        (NprkTensor::from_classical(&tab), Stepper::Classical(tab), order)
    } else {
        return Err(usage(name, "see the method table in the documentation"));
    };

    let stepper = if generic {
        Stepper::Generic(tensor.clone())
    } else {
        stepper
    };
    Ok(Method {
        name: name.to_string(),
        tensor,
        stepper,
        order,
    })
}

/// Filesystem-safe version of a method name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
