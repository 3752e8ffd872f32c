use std::thread;

/// Maps `f` over `items` on up to `jobs` scoped threads with a static
/// contiguous partition. Output order always matches input order.
pub fn par_map<T, R, E, Fun>(items: &[T], jobs: usize, f: Fun) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    Fun: Fn(&T) -> Result<R, E> + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    let parts: Vec<Result<Vec<R>, E>> = thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Result<Vec<R>, E>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_job_count() {
        let items: Vec<usize> = (0..103).collect();
        for jobs in [1, 2, 3, 8, 200] {
            let out: Vec<usize> = par_map(&items, jobs, |&x| Ok::<_, ()>(x * 2)).unwrap();
            assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_in_input_order_wins() {
        let items: Vec<i32> = (0..10).collect();
        let err = par_map(&items, 4, |&x| if x >= 5 { Err(x) } else { Ok(x) }).unwrap_err();
        assert_eq!(err, 5);
    }
}
