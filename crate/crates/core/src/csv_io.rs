//! Cohort CSV reading and writing.
//!
//! Doses are written with four decimals; values generated by [`crate::synth`]
//! are pre-rounded to that precision so a read/write cycle is lossless.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Cohort, CohortLabel, DosePlan, PatientRecord, Period, Treatment, TumorLocation};

pub const HEADER: [&str; 14] = [
    "id",
    "period",
    "treatment",
    "baseline_dysphagia",
    "tumor_location",
    "dose_sup_pcm",
    "dose_mid_pcm",
    "dose_inf_pcm",
    "dose_oral_cavity",
    "dose_sup_pcm_proton",
    "dose_mid_pcm_proton",
    "dose_inf_pcm_proton",
    "dose_oral_cavity_proton",
    "outcome",
];

/// Decimal places used for doses in CSV output.
pub const DOSE_DECIMALS: usize = 4;

pub fn round_dose(x: f64) -> f64 {
    let scale = 10f64.powi(DOSE_DECIMALS as i32);
    (x * scale).round() / scale
}

fn fmt_dose(x: f64) -> String {
    format!("{:.*}", DOSE_DECIMALS, x)
}

pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in &cohort.records {
        let mut row: Vec<String> = Vec::with_capacity(HEADER.len());
        row.push(r.id.clone());
        row.push(match r.period {
            Period::Pre => "pre".into(),
            Period::Post => "post".into(),
        });
        row.push(r.treatment.code().to_string());
        row.push(r.baseline_dysphagia.to_string());
        row.push(r.tumor_location.as_str().into());
        row.extend(r.photon_doses.values().iter().map(|&d| fmt_dose(d)));
        match &r.proton_doses {
            Some(p) => row.extend(p.values().iter().map(|&d| fmt_dose(d))),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(r.outcome.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cohort_file(cohort: &Cohort, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_cohort(cohort, std::io::BufWriter::new(f))
}

pub fn cohort_to_string(cohort: &Cohort) -> Result<String> {
    let mut buf = Vec::new();
    write_cohort(cohort, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}

/// Reads a cohort. Structural problems (unparseable fields) are errors;
/// invariant breaches are left to [`crate::types::validate`].
pub fn read_cohort<R: Read>(reader: R, label: CohortLabel) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut pos = [0usize; 14];
    for (k, name) in HEADER.iter().enumerate() {
        pos[k] = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                column: name.to_string(),
                reason: "missing column in header".into(),
            })?;
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| row.get(pos[k]).unwrap_or("").trim();
        let err = |k: usize, reason: &str| Error::Parse {
            line,
            column: HEADER[k].to_string(),
            reason: reason.to_string(),
        };

        let period = match field(1) {
            "pre" => Period::Pre,
            "post" => Period::Post,
            _ => return Err(err(1, "expected `pre` or `post`")),
        };
        let treatment = match field(2) {
            "0" => Treatment::Standard,
            "1" => Treatment::Target,
            _ => return Err(err(2, "expected 0 or 1")),
        };
        let baseline_dysphagia: u8 = field(3).parse().map_err(|_| err(3, "expected an integer"))?;
        let tumor_location = TumorLocation::parse(field(4)).ok_or_else(|| err(4, "unknown tumor location"))?;
        let mut photon = [0.0; 4];
        for (j, slot) in photon.iter_mut().enumerate() {
            *slot = field(5 + j).parse().map_err(|_| err(5 + j, "expected a number"))?;
        }
        let proton_fields: Vec<&str> = (9..13).map(field).collect();
        let proton_doses = if proton_fields.iter().all(|s| s.is_empty()) {
            None
        } else {
            let mut p = [0.0; 4];
            for (j, slot) in p.iter_mut().enumerate() {
                *slot = proton_fields[j]
                    .parse()
                    .map_err(|_| err(9 + j, "expected a number or all proton columns empty"))?;
            }
            Some(DosePlan::new(p))
        };
        let outcome: u8 = field(13).parse().map_err(|_| err(13, "expected an integer"))?;

        records.push(PatientRecord {
            id: field(0).to_string(),
            period,
            treatment,
            baseline_dysphagia,
            tumor_location,
            photon_doses: DosePlan::new(photon),
            proton_doses,
            outcome,
            latent: None,
        });
    }
    Ok(Cohort::new(label, records))
}

pub fn read_cohort_file(path: &Path, label: CohortLabel) -> Result<Cohort> {
    let f = std::fs::File::open(path)?;
    read_cohort(std::io::BufReader::new(f), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
id,period,treatment,baseline_dysphagia,tumor_location,dose_sup_pcm,dose_mid_pcm,dose_inf_pcm,dose_oral_cavity,dose_sup_pcm_proton,dose_mid_pcm_proton,dose_inf_pcm_proton,dose_oral_cavity_proton,outcome
p1,post,1,0,larynx,55.1234,40.0000,30.5000,12.0001,20.0000,18.2500,10.0000,3.1416,1
p2,post,0,1,oropharynx,60.0000,50.0000,45.0000,33.3333,41.0000,30.0000,29.9999,20.0000,0
";

    #[test]
    fn parses_and_reproduces_sample() {
        let c = read_cohort(SAMPLE.as_bytes(), CohortLabel::PostIntroduction).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.records[0].tumor_location, TumorLocation::Larynx);
        assert_eq!(c.records[0].treatment, Treatment::Target);
        assert_eq!(c.records[1].proton_doses.unwrap().dose_inf_pcm, 29.9999);
        assert_eq!(cohort_to_string(&c).unwrap(), SAMPLE);
    }

    #[test]
    fn pre_rows_have_empty_proton_columns() {
        let csv = "id,period,treatment,baseline_dysphagia,tumor_location,dose_sup_pcm,dose_mid_pcm,dose_inf_pcm,dose_oral_cavity,dose_sup_pcm_proton,dose_mid_pcm_proton,dose_inf_pcm_proton,dose_oral_cavity_proton,outcome\n\
                   a,pre,0,0,nasopharynx,1.0000,2.0000,3.0000,4.0000,,,,,0\n";
        let c = read_cohort(csv.as_bytes(), CohortLabel::PreIntroduction).unwrap();
        assert!(c.records[0].proton_doses.is_none());
        assert_eq!(cohort_to_string(&c).unwrap(), csv);
    }

    #[test]
    fn bad_field_is_located() {
        let bad = SAMPLE.replace("larynx", "kidney");
        match read_cohort(bad.as_bytes(), CohortLabel::PostIntroduction) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "tumor_location");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_rejected() {
        let bad = SAMPLE.replacen("outcome", "result", 1);
        assert!(matches!(
            read_cohort(bad.as_bytes(), CohortLabel::PostIntroduction),
            Err(Error::Parse { .. })
        ));
    }

    fn arb_record() -> impl Strategy<Value = PatientRecord> {
        let dose = (0u32..=800_000).prop_map(|k| k as f64 / 10_000.0);
        let plan = proptest::array::uniform4(dose).prop_map(DosePlan::new);
        (
            0usize..4,
            any::<bool>(),
            0u8..2,
            0u8..2,
            plan.clone(),
            proptest::option::of(plan),
        )
            .prop_map(|(loc, post, bd, y, photon, proton)| {
                let period = if post { Period::Post } else { Period::Pre };
                let proton = if post { proton } else { None };
                let treatment = if proton.is_some() && bd == 1 {
                    Treatment::Target
                } else {
                    Treatment::Standard
                };
                PatientRecord {
                    id: format!("r{loc}{bd}{y}"),
                    period,
                    treatment,
                    baseline_dysphagia: bd,
                    tumor_location: TumorLocation::ALL[loc],
                    photon_doses: photon,
                    proton_doses: proton,
                    outcome: y,
                    latent: None,
                }
            })
    }

    proptest! {
        #[test]
        fn write_read_write_is_identity(records in proptest::collection::vec(arb_record(), 1..20)) {
            let c = Cohort::new(CohortLabel::PostIntroduction, records);
            let text = cohort_to_string(&c).unwrap();
            let back = read_cohort(text.as_bytes(), CohortLabel::PostIntroduction).unwrap();
            prop_assert_eq!(&back.records, &c.records);
            prop_assert_eq!(cohort_to_string(&back).unwrap(), text);
        }
    }
}
