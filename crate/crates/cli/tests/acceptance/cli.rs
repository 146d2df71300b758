use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

use crate::support::Verdict;

const SEED: &str = "7";
const THREAD_COUNTS: [&str; 3] = ["1", "1", "8"];

fn strip_wall_time(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_time_ms");
            map.values_mut().for_each(strip_wall_time);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

/// The document with timing fields removed. JSON lines lose their
/// `wall_time_ms` keys; a CSV table with a `wall_time_ms` column has it blanked.
pub fn normalize(doc: &str) -> String {
    let mut lines = doc.lines();
    let Some(head) = lines.next() else {
        return String::new();
    };
    let csv_col = head.split(',').position(|c| c == "wall_time_ms");
    std::iter::once(head)
        .chain(lines)
        .map(|line| {
            if let Some(col) = csv_col {
                return line
                    .split(',')
                    .enumerate()
                    .map(|(i, f)| if i == col { "" } else { f })
                    .collect::<Vec<_>>()
                    .join(",");
            }
            match serde_json::from_str::<Value>(line) {
                Ok(mut v) if v.is_object() => {
                    strip_wall_time(&mut v);
                    v.to_string()
                }
                _ => line.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn fixtures(dir: &Path) {
    write(
        dir,
        "sample.toml",
        r#"
[sampler]
type = "wrapped_normal"
manifold = { kind = "lorentz", dim = 2, curvature = -1.0 }
mean = [1.0, 0.0, 0.0]
sigma = 0.5
n = 60
"#,
    );
    write(
        dir,
        "sample_nu.toml",
        r#"
seed = 5

[sampler]
type = "mixture"
manifold = { kind = "lorentz", dim = 2, curvature = -1.0 }
n = 45

[[sampler.components]]
weight = 0.4
mean = [1.5430806348152437, 1.1752011936438014, 0.0]
sigma = 0.3

[[sampler.components]]
weight = 0.6
mean = [1.5430806348152437, 0.0, 1.1752011936438014]
sigma = 0.2
"#,
    );
    write(
        dir,
        "distance.toml",
        "mu = \"mu.txt\"\nnu = \"nu.txt\"\nnum_projections = 128\nprojection = \"horospherical\"\n",
    );
    write(
        dir,
        "flow.toml",
        r#"
step_size = 0.1
num_steps = 15
num_projections = 32
projection = "geodesic"
eval_every = 5
exact_w2 = true
snapshot_dir = "snapshots"

[init]
type = "spd_log_gaussian"
manifold = { kind = "spd_log_euclidean", n = 2 }
base = [[1.0, 0.0], [0.0, 1.0]]
scale = 0.3
n = 40

[target]
type = "spd_log_gaussian"
manifold = { kind = "spd_log_euclidean", n = 2 }
base = [[2.0, 0.5], [0.5, 1.0]]
scale = 0.2
n = 40
"#,
    );
    let pts: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.2], [0.2, 0.7]];
    let csv: String = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| format!("{:?}", ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()))
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    write(dir, "dist.csv", &csv);
    write(dir, "mds.toml", "distances = \"dist.csv\"\ntarget_dim = 2\nmax_iters = 2000\nrestarts = 3\n");
    write(
        dir,
        "bench.toml",
        r#"
manifolds = [
  { kind = "euclidean", dim = 3 },
  { kind = "poincare", dim = 2, curvature = -1.0 },
  { kind = "spd_affine_invariant", n = 2 },
]
sizes = [50]
num_projections = [8, 32]
"#,
    );
}

fn run(bin: &str, dir: &Path, args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(bin)
        .current_dir(dir)
        .args(args)
        .args(["--seed", SEED, "--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

/// Result documents of one invocation: standard output, the `--output` file
/// and any snapshots, in a fixed order.
fn documents(bin: &str, dir: &Path, args: &[&str], threads: &str) -> Result<Vec<String>, String> {
    let snapshots = dir.join("snapshots");
    let _ = fs::remove_dir_all(&snapshots);
    let _ = fs::remove_file(dir.join("out.txt"));
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--output", "out.txt"]);
    let stdout = run(bin, dir, &full, threads)?;
    let mut docs = vec![
        normalize(&String::from_utf8_lossy(&stdout)),
        normalize(&fs::read_to_string(dir.join("out.txt")).map_err(|e| e.to_string())?),
    ];
    if snapshots.exists() {
        let mut names: Vec<_> = fs::read_dir(&snapshots)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        for p in names {
            docs.push(format!("{}\n{}", p.file_name().unwrap().to_string_lossy(), fs::read_to_string(&p).unwrap()));
        }
    }
    Ok(docs)
}

pub fn cli_is_deterministic() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_chsw");
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    fixtures(dir);
    for (cfg, name) in [("sample.toml", "mu.txt"), ("sample_nu.toml", "nu.txt")] {
        if let Err(e) = run(bin, dir, &["sample", "--config", cfg, "--output", name], "1") {
            return Verdict::fail(e);
        }
    }
    let commands: [&[&str]; 5] = [
        &["sample", "--config", "sample.toml"],
        &["distance", "--config", "distance.toml"],
        &["flow", "--config", "flow.toml"],
        &["mds", "--config", "mds.toml"],
        &["bench", "--config", "bench.toml"],
    ];
    let mut differing = Vec::new();
    let mut total_bytes = 0;
    for args in commands {
        let mut reference: Option<Vec<String>> = None;
        for threads in THREAD_COUNTS {
            let docs = match documents(bin, dir, args, threads) {
                Ok(d) => d,
                Err(e) => return Verdict::fail(e),
            };
            match &reference {
                None => {
                    total_bytes += docs.iter().map(String::len).sum::<usize>();
                    reference = Some(docs);
                }
                Some(r) if *r != docs => differing.push(format!("{} --threads {threads}", args[0])),
                Some(_) => {}
            }
        }
    }
    Verdict::new(
        differing.is_empty(),
        format!(
            "sample, distance, flow, mds, bench with --seed {SEED}: {} mismatches over runs and --threads 1/8 \
             ({total_bytes} reference bytes, wall_time_ms excluded){}",
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    )
}
