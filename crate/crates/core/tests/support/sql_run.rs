//! Run an emitted SQL script in an in-memory SQLite database.

use std::collections::BTreeSet;
use std::sync::mpsc;
use std::time::Duration;

use ontoq_core::emitters::{parse_sql_value, SqlScript};
use ontoq_core::evaluator::Answer;

pub fn run_sql(script: &SqlScript) -> rusqlite::Result<Answer> {
    run_sql_within(script, None)
}

/// Like [`run_sql`], interrupting the engine once `limit` has passed.
pub fn run_sql_within(script: &SqlScript, limit: Option<Duration>) -> rusqlite::Result<Answer> {
    let conn = rusqlite::Connection::open_in_memory()?;
    // Dropping `_done` when this function returns wakes the watchdog early.
    let (_done, wake) = mpsc::channel::<()>();
    if let Some(limit) = limit {
        let handle = conn.get_interrupt_handle();
        std::thread::spawn(move || {
            if wake.recv_timeout(limit) == Err(mpsc::RecvTimeoutError::Timeout) {
                handle.interrupt();
            }
        });
    }
    conn.execute_batch(&script.setup)?;
    let mut stmt = conn.prepare(&script.query)?;
    if script.boolean {
        let b: i64 = stmt.query_row([], |r| r.get(0))?;
        return Ok(Answer::Boolean(b != 0));
    }
    let cols = stmt.column_count();
    let rows = stmt.query_map([], |r| {
        (0..cols)
            .map(|i| r.get::<_, String>(i).map(|s| parse_sql_value(&s)))
            .collect::<rusqlite::Result<Vec<_>>>()
    })?;
    Ok(Answer::Tuples(rows.collect::<rusqlite::Result<BTreeSet<_>>>()?))
}
