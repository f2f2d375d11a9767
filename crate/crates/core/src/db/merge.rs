use std::fs;
use std::path::Path;

use super::{fragment_path, DbError, Fragment, FragmentDb};
use crate::outdir::prepare_empty_dir;

/// Union of two databases written to `out`. Fragment ids are prefixed with
/// `a/` and `b/`, so each key lists `a`'s fragments before `b`'s.
///
/// A database without fragments is compatible with any sample rate.
pub fn merge_dbs(a: &FragmentDb, b: &FragmentDb, out: &Path) -> Result<FragmentDb, DbError> {
    let sample_rate_hz = match (a.is_empty(), b.is_empty()) {
        (false, false) if a.sample_rate_hz() != b.sample_rate_hz() => {
            return Err(DbError::RateMismatch {
                what: "second database".into(),
                expected: a.sample_rate_hz(),
                found: b.sample_rate_hz(),
            })
        }
        (true, false) => b.sample_rate_hz(),
        _ => a.sample_rate_hz(),
    };
    prepare_empty_dir(out)?;

    let mut fragments = Vec::with_capacity(a.fragment_count() + b.fragment_count());
    for (prefix, db) in [("a", a), ("b", b)] {
        for frag in db.fragments() {
            let frag_id = format!("{prefix}/{}", frag.frag_id);
            let path = fragment_path(&frag.key, &frag_id);
            let dest = out.join(&path);
            let parent = dest.parent().expect("fragment path has a parent");
            fs::create_dir_all(parent).map_err(|e| DbError::io(parent, e))?;
            let src = db.fragment_file(frag);
            fs::copy(&src, &dest).map_err(|e| DbError::io(&src, e))?;
            fragments.push(Fragment {
                frag_id,
                path,
                ..frag.clone()
            });
        }
    }
    FragmentDb::persist(out, sample_rate_hz, fragments)
}
