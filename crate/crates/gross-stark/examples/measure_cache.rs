//! Builds the smoothed Eisenstein measure of one class at a few levels,
//! checks mass zero and the distribution relation, then round-trips it
//! through the on-disk JSON cache.
//!
//! cargo run --example measure_cache -- 689 3 4

use gross_stark::measure::{load_or_build, refine_report, values_in_z_c, CacheStatus, EisensteinMeasure, MeasureSpec};
use gross_stark::quadfield::NarrowClassGroup;
use num_traits::Zero;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let disc: i64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(689);
    let p: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let top: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let c = 7;
    let class = NarrowClassGroup::new(disc)?.forms[0];
    let dir = std::env::temp_dir().join(format!("gross-stark-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let mut prev: Option<EisensteinMeasure> = None;
    for r in 1..=top {
        let spec = MeasureSpec::new(disc, p, c, class, r);
        let (m, status) = load_or_build(&spec, Some(&dir))?;
        let refine = match &prev {
            Some(a) => refine_report(a, &m)?.holds().to_string(),
            None => "-".into(),
        };
        println!(
            "level {r}: {:>5} balls, mass zero {}, values in Z[1/{c}] {}, refines level {}: {refine}",
            m.balls.len(),
            m.total_mass().is_zero(),
            values_in_z_c(&m),
            r.saturating_sub(1),
        );
        assert_eq!(status, CacheStatus::Built);
        prev = Some(m);
    }

    let spec = MeasureSpec::new(disc, p, c, class, top);
    let path = EisensteinMeasure::cache_path(&dir, &spec)?;
    let on_disk = std::fs::read_to_string(&path)?;
    let (again, status) = load_or_build(&spec, Some(&dir))?;
    println!("reloaded {} ({status:?}), byte identical: {}", path.display(), again.to_json() == on_disk);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
