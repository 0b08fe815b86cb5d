use chrono::{DateTime, Duration, NaiveDate, Utc};
use nominee::corpus::{
    bucket_by_period, parse_tweet_stream, period_stats, read_tweet_stream, write_skip_report, write_tweets,
    PeriodScheme,
};
use nominee::Tweet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn at(date: NaiveDate, secs: i64) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0).unwrap().and_utc() + Duration::seconds(secs)
}

#[test]
fn ten_lines_with_two_corrupted() {
    let mut lines: Vec<String> = (0..10)
        .map(|i| format!(r#"{{"id_str":"{i}","created_at":"Wed Dec 16 0{i}:00:00 +0000 2015","text":"tweet {i}"}}"#))
        .collect();
    lines[3] = r#"{"id_str":"3","created_at":"Wed Dec 16"#.to_string();
    lines[7] = r#"{"id_str":"7","text":"no date"}"#.to_string();

    let parsed = parse_tweet_stream(&lines, "day1.jsonl");
    assert_eq!(parsed.tweets.len(), 8);
    let skipped: Vec<usize> = parsed.skipped.iter().map(|s| s.line_number).collect();
    assert_eq!(skipped, vec![4, 8]);
    assert!(parsed.skipped.iter().all(|s| s.file == "day1.jsonl"));

    let mut report = Vec::new();
    write_skip_report(&mut report, &parsed.skipped).unwrap();
    let report = String::from_utf8(report).unwrap();
    assert_eq!(report.lines().count(), 3);
}

#[test]
fn invalid_utf8_is_a_skip_not_an_abort() {
    let mut raw = br#"{"id":1,"created_at":"2016-02-03T10:00:00Z","text":"ok"}"#.to_vec();
    raw.extend_from_slice(b"\n\xff\xfe garbage\n");
    raw.extend_from_slice(br#"{"id":2,"created_at":"2016-02-03T11:00:00Z","text":"also ok"}"#);
    let parsed = read_tweet_stream(raw.as_slice(), "f").unwrap();
    assert_eq!(parsed.tweets.len(), 2);
    assert_eq!(parsed.skipped.len(), 1);
    assert_eq!(parsed.skipped[0].line_number, 2);
}

#[test]
fn id_precedence() {
    let lines = [
        r#"{"id":123,"id_str":"9007199254740993","created_at":"2016-01-01T00:00:00Z","text":"a"}"#,
        r#"{"id":"abc","created_at":"2016-01-01T00:00:00Z","text":"b"}"#,
        r#"{"id":77,"created_at":"2016-01-01T00:00:00Z","text":"c"}"#,
        r#"{"created_at":"2016-01-01T00:00:00Z","text":"d"}"#,
    ];
    let ids: Vec<String> = parse_tweet_stream(lines, "x.jsonl").tweets.into_iter().map(|t| t.id).collect();
    assert_eq!(ids, ["9007199254740993", "abc", "77", "x.jsonl:4"]);
}

#[test]
fn uniform_tweets_bucket_like_brute_force() {
    let start = day(2015, 12, 16);
    let end = day(2016, 2, 29);
    let span = (end - start).num_seconds() + 86_400;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tweets: Vec<Tweet> = (0..100)
        .map(|i| Tweet {
            id: i.to_string(),
            created_at: at(start, rng.gen_range(0..span)),
            text: "x".into(),
        })
        .collect();
    let scheme = PeriodScheme::weekly(start);
    let stats = period_stats(&bucket_by_period(&tweets, &scheme)).unwrap();

    // brute force: walk the weeks by date arithmetic
    let mut expected = Vec::new();
    let mut week_start = start;
    while week_start <= end {
        let week_end = week_start + Duration::days(7);
        expected.push(
            tweets
                .iter()
                .filter(|t| t.created_at.date_naive() >= week_start && t.created_at.date_naive() < week_end)
                .count(),
        );
        week_start = week_end;
    }
    while expected.last() == Some(&0) {
        expected.pop();
    }
    assert_eq!(stats.counts, expected);
    assert_eq!(stats.counts.iter().sum::<usize>(), 100);

    let n = expected.len() as f64;
    let mean = 100.0 / n;
    let sd = (expected.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((stats.mean - mean).abs() < 1e-12);
    assert!((stats.std_dev - sd).abs() < 1e-12);
}

#[test]
fn pre_window_tweets_are_set_aside() {
    let start = day(2016, 1, 1);
    let tweets = vec![
        Tweet { id: "a".into(), created_at: at(day(2015, 12, 31), 86_399), text: "x".into() },
        Tweet { id: "b".into(), created_at: at(start, 0), text: "y".into() },
    ];
    let b = bucket_by_period(&tweets, &PeriodScheme::weekly(start));
    assert_eq!(b.pre_window.len(), 1);
    assert_eq!(b.periods[&0].len(), 1);
}

#[test]
fn zero_length_period_is_rejected() {
    assert!(PeriodScheme::new(day(2016, 1, 1), 0).is_err());
}

fn arb_tweets() -> impl Strategy<Value = Vec<Tweet>> {
    prop::collection::vec((0i64..120 * 86_400, "[a-zA-Z#@ ]{1,30}"), 0..60).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (secs, text))| Tweet {
                id: format!("t{i}"),
                created_at: at(day(2015, 11, 1), secs),
                text: format!("{text}!"),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn write_then_parse_round_trips(tweets in arb_tweets()) {
        let mut buf = Vec::new();
        write_tweets(&mut buf, &tweets).unwrap();
        let parsed = read_tweet_stream(buf.as_slice(), "rt").unwrap();
        prop_assert!(parsed.skipped.is_empty());
        prop_assert_eq!(parsed.tweets, tweets);
    }

    #[test]
    fn buckets_partition_the_corpus(tweets in arb_tweets(), offset in 0i64..100, len in 1u32..15) {
        let scheme = PeriodScheme::new(day(2015, 11, 1) + Duration::days(offset), len).unwrap();
        let b = bucket_by_period(&tweets, &scheme);
        prop_assert_eq!(b.len(), tweets.len());
        let mut ids: Vec<&str> = b.pre_window.iter().chain(b.periods.values().flatten()).map(|t| t.id.as_str()).collect();
        ids.sort();
        let mut all: Vec<&str> = tweets.iter().map(|t| t.id.as_str()).collect();
        all.sort();
        prop_assert_eq!(ids, all);
        for (idx, members) in &b.periods {
            let first = scheme.period_start(*idx);
            for t in members {
                let d = t.created_at.date_naive();
                prop_assert!(d >= first && d < first + Duration::days(i64::from(len)));
            }
        }
    }
}
