//! Command-line front end: every subcommand reads/writes single JSON
//! documents so commands pipe into each other. Mathematical failure
//! states exit 1 with `{"error": code, "detail": ...}` on stdout; usage
//! and parse errors exit 2. All diagnostics go to stderr.

use std::ffi::OsString;
use std::io::Read;

use clap::{Arg, ArgMatches, Command};
use serde_json::{json, Value};

use crate::dieudonne::DModule;
use crate::error::{Error, Result};
use crate::families::{build_example42, verify_no_csd_isogeny, ParamFamily};
use crate::newton::newton_polygon;
use crate::padic::{Ring, RingParams};
use crate::slope::{
    csd_saturate, descend_finite_field, enumerate_csd_isogenies, is_completely_slope_divisible,
    slope_filtration, split_isoclinic, SlopeData,
};

const DEFAULT_CANDIDATE_CAP: u64 = 100_000;

fn candidate_cap() -> u64 {
    std::env::var("DVLAB_CANDIDATE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CANDIDATE_CAP)
}

fn command() -> Command {
    let input_arg = Arg::new("input")
        .long("input")
        .value_name("FILE")
        .help("read the module JSON from FILE instead of stdin");
    let p_arg = Arg::new("p").long("p").required(true).value_parser(clap::value_parser!(u64));
    let a_arg = Arg::new("a")
        .long("a")
        .default_value("1")
        .value_parser(clap::value_parser!(usize))
        .help("field degree: computations over W_N(F_{p^a})");
    let s_arg = Arg::new("s").long("s").required(true).value_parser(clap::value_parser!(u32));
    let r_arg = Arg::new("r")
        .long("r")
        .required(true)
        .help("comma-separated strictly decreasing integers r_1 > ... > r_m");
    Command::new("dvlab")
        .about("exact Dieudonné-module computations over finite fields")
        .arg(
            Arg::new("parallel")
                .long("parallel")
                .global(true)
                .value_name("K")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads for enumeration and fiber sweeps (default 1)"),
        )
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("ring")
                .about("construct W_N(F_{p^a}) and print it")
                .arg(p_arg.clone())
                .arg(a_arg.clone())
                .arg(Arg::new("N").long("N").required(true).value_parser(clap::value_parser!(u32))),
        )
        .subcommand(
            Command::new("gmn")
                .about("the iso-simple module G_{m,n} of slope m/(m+n)")
                .arg(Arg::new("m").long("m").required(true).value_parser(clap::value_parser!(u32)))
                .arg(Arg::new("n").long("n").required(true).value_parser(clap::value_parser!(u32)))
                .arg(p_arg.clone())
                .arg(a_arg.clone())
                .arg(Arg::new("N").long("N").value_parser(clap::value_parser!(u32)).help(
                    "precision; defaults to m + budget + 2 (enough for the polygon)",
                ))
                .arg(
                    Arg::new("budget")
                        .long("budget")
                        .default_value("0")
                        .value_parser(clap::value_parser!(u32))
                        .help("log-degree budget reserved on top of the polygon need"),
                ),
        )
        .subcommand(
            Command::new("newton")
                .about("Newton polygon of a module (reads module JSON)")
                .arg(input_arg.clone()),
        )
        .subcommand(
            Command::new("filtration")
                .about("the unique slope filtration of a module")
                .arg(input_arg.clone()),
        )
        .subcommand(
            Command::new("csd-check")
                .about("test complete slope divisibility w.r.t. s >= r_1 > ... > r_m")
                .arg(input_arg.clone())
                .arg(s_arg.clone())
                .arg(r_arg.clone()),
        )
        .subcommand(
            Command::new("saturate")
                .about("isogeny to a completely slope divisible module")
                .arg(input_arg.clone()),
        )
        .subcommand(
            Command::new("split")
                .about("split a completely slope divisible module into isoclinic summands")
                .arg(input_arg.clone()),
        )
        .subcommand(
            Command::new("descend")
                .about("finite-field model of an isoclinic completely slope divisible module")
                .arg(input_arg.clone())
                .arg(s_arg.clone())
                .arg(r_arg.clone()),
        )
        .subcommand(
            Command::new("enumerate")
                .about("all Φ-stable overlattices of a given colength (the finite isogeny list)")
                .arg(input_arg.clone())
                .arg(Arg::new("log-d").long("log-d").required(true).value_parser(clap::value_parser!(u32)))
                .arg(s_arg.clone())
                .arg(r_arg.clone()),
        )
        .subcommand(
            Command::new("example41")
                .about("fiberwise report for the one-parameter family without slope filtration")
                .arg(p_arg.clone())
                .arg(a_arg.clone())
                .arg(Arg::new("N").long("N").value_parser(clap::value_parser!(u32)).help(
                    "precision; defaults to 5",
                )),
        )
        .subcommand(
            Command::new("example42")
                .about("the glued group over the nodal curve")
                .arg(p_arg.clone())
                .arg(Arg::new("N").long("N").value_parser(clap::value_parser!(u32)).help(
                    "precision; defaults to 6",
                )),
        )
        .subcommand(
            Command::new("verify42")
                .about("verify the uniform degree mismatch: no glued csd isogeny up to a bound")
                .arg(p_arg.clone())
                .arg(Arg::new("N").long("N").value_parser(clap::value_parser!(u32)))
                .arg(
                    Arg::new("log-d-max")
                        .long("log-d-max")
                        .default_value("2")
                        .value_parser(clap::value_parser!(u32)),
                ),
        )
}

fn read_module(matches: &ArgMatches) -> Result<DModule> {
    let text = match matches.get_one::<String>("input") {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Error::Parse(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    DModule::from_json(&value)
}

fn parse_slope_data(matches: &ArgMatches) -> Result<SlopeData> {
    let s = *matches.get_one::<u32>("s").expect("required");
    let r_text = matches.get_one::<String>("r").expect("required");
    let r: Vec<u32> = r_text
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|e| Error::Parse(format!("bad r list: {e}"))))
        .collect::<Result<_>>()?;
    SlopeData::new(s, r)
}

fn dispatch(matches: &ArgMatches) -> Result<Value> {
    match matches.subcommand() {
        Some(("ring", m)) => {
            let ring = Ring::new(RingParams {
                p: *m.get_one::<u64>("p").unwrap(),
                a: *m.get_one::<usize>("a").unwrap(),
                n: *m.get_one::<u32>("N").unwrap(),
            })?;
            Ok(ring.to_json())
        }
        Some(("gmn", m)) => {
            let mm = *m.get_one::<u32>("m").unwrap();
            let nn = *m.get_one::<u32>("n").unwrap();
            let budget = *m.get_one::<u32>("budget").unwrap();
            let n = m.get_one::<u32>("N").copied().unwrap_or(mm + budget + 2);
            let ring = Ring::new(RingParams {
                p: *m.get_one::<u64>("p").unwrap(),
                a: *m.get_one::<usize>("a").unwrap(),
                n,
            })?;
            let g = DModule::make_gmn(mm, nn, &ring)?;
            Ok(g.to_json())
        }
        Some(("newton", m)) => {
            let module = read_module(m)?;
            let poly = newton_polygon(&module)?;
            Ok(json!({ "polygon": poly.to_json() }))
        }
        Some(("filtration", m)) => {
            let module = read_module(m)?;
            let filt = slope_filtration(&module)?;
            Ok(filt.to_json())
        }
        Some(("csd-check", m)) => {
            let module = read_module(m)?;
            let sd = parse_slope_data(m)?;
            let check = is_completely_slope_divisible(&module, &sd)?;
            Ok(match check.filtration {
                Some(f) if check.holds => json!({
                    "csd": true,
                    "s": sd.s(),
                    "r": sd.r(),
                    "filtration": f.to_json(),
                }),
                _ => json!({
                    "csd": false,
                    "s": sd.s(),
                    "r": sd.r(),
                    "failure": check.failure.unwrap_or_default(),
                }),
            })
        }
        Some(("saturate", m)) => {
            let module = read_module(m)?;
            let isog = csd_saturate(&module)?;
            Ok(isog.to_json())
        }
        Some(("split", m)) => {
            let module = read_module(m)?;
            let split = split_isoclinic(&module)?;
            let ring = module.ring();
            let h = module.rank();
            let witness_rows: Vec<Value> = (0..h)
                .map(|r| {
                    Value::Array((0..h).map(|c| ring.elem_to_json(split.witness.at(r, c))).collect())
                })
                .collect();
            Ok(json!({
                "summands": split.parts.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
                "witness": witness_rows,
            }))
        }
        Some(("descend", m)) => {
            let module = read_module(m)?;
            let sd = parse_slope_data(m)?;
            let descent = descend_finite_field(&module, &sd)?;
            let big = descent.base_changed_input.ring();
            let h = descent.base_changed_input.rank();
            let witness_rows: Vec<Value> = (0..h)
                .map(|r| {
                    Value::Array((0..h).map(|c| big.elem_to_json(descent.witness.at(r, c))).collect())
                })
                .collect();
            Ok(json!({
                "model": descent.model.to_json(),
                "model_field_degree": descent.model.ring().degree(),
                "witness": witness_rows,
            }))
        }
        Some(("enumerate", m)) => {
            let module = read_module(m)?;
            let sd = parse_slope_data(m)?;
            let log_d = *m.get_one::<u32>("log-d").unwrap();
            let found = enumerate_csd_isogenies(&module, log_d, &sd, candidate_cap())?;
            Ok(json!({
                "count": found.len(),
                "isogenies": found
                    .iter()
                    .map(|c| {
                        json!({
                            "lattice": c.lattice.to_json(),
                            "log_degree": c.log_degree,
                            "transportable": c.isogeny.is_some(),
                            "isogeny": c.isogeny.as_ref().map(|i| i.to_json()),
                        })
                    })
                    .collect::<Vec<_>>(),
            }))
        }
        Some(("example41", m)) => {
            let p = *m.get_one::<u64>("p").unwrap();
            let a = *m.get_one::<usize>("a").unwrap();
            let n = m.get_one::<u32>("N").copied().unwrap_or(5);
            let family = ParamFamily::new(p, a, n)?;
            Ok(family.sweep()?.to_json())
        }
        Some(("example42", m)) => {
            let p = *m.get_one::<u64>("p").unwrap();
            let n = m.get_one::<u32>("N").copied().unwrap_or(6);
            let glued = build_example42(p, n)?;
            Ok(glued.to_json())
        }
        Some(("verify42", m)) => {
            let p = *m.get_one::<u64>("p").unwrap();
            let n = m.get_one::<u32>("N").copied().unwrap_or(6);
            let log_d_max = *m.get_one::<u32>("log-d-max").unwrap();
            let glued = build_example42(p, n)?;
            let report = verify_no_csd_isogeny(&glued, log_d_max, candidate_cap())?;
            Ok(report.to_json())
        }
        _ => Err(Error::Parse("unknown subcommand".into())),
    }
}

/// Run the CLI on the given argv; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(&k) = matches.get_one::<usize>("parallel") {
        // ignore failure when a pool is already set (repeat invocation in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    } else {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match dispatch(&matches) {
        Ok(value) => {
            println!("{value}");
            0
        }
        Err(e) if e.is_usage() => {
            eprintln!("dvlab: {e}");
            2
        }
        Err(e) => {
            println!("{}", json!({ "error": e.code(), "detail": e.to_string() }));
            eprintln!("dvlab: {e}");
            1
        }
    }
}
