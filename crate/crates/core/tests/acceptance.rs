use eulerpoisson::verify::{run_all, VerifyOptions};

fn main() {
    let results = run_all(&VerifyOptions::default());
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
