use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use sketchbench::{run, BenchConfig, ConfigError, CsvSink};

fn main() -> ExitCode {
    let cfg = match BenchConfig::try_parse_from(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ConfigError::Cli(e)) => e.exit(),
        Err(e) => {
            eprintln!("sketchbench: {e}");
            return ExitCode::from(2);
        }
    };
    let out: Box<dyn Write + Send> = match &cfg.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("sketchbench: cannot create {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut sink = CsvSink::new(out);
    let written = run(&cfg, &mut |r| sink.write(&r)).map_err(io::Error::from);
    let result = written.and_then(|_| sink.finish().map(drop));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sketchbench: writing output failed: {e}");
            ExitCode::FAILURE
        }
    }
}
