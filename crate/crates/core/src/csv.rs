//! CSV writers. Every number is printed with 17 significant digits and rows
//! end in `\n`.

use std::io::{self, Write};

use crate::analysis::BifurcationRow;
use crate::dynamics::Orbit;
use crate::scalar::format_sig17;

/// `n,x,y`, one row per stored point.
pub fn write_orbit<W: Write>(mut w: W, orbit: &Orbit) -> io::Result<()> {
    writeln!(w, "n,x,y")?;
    for (n, p) in orbit.points.iter().enumerate() {
        writeln!(w, "{n},{},{}", format_sig17(p.x), format_sig17(p.y))?;
    }
    Ok(())
}

/// `n,r`, one row per value.
pub fn write_scalar_orbit<W: Write>(mut w: W, values: &[f64]) -> io::Result<()> {
    writeln!(w, "n,r")?;
    for (n, r) in values.iter().enumerate() {
        writeln!(w, "{n},{}", format_sig17(*r))?;
    }
    Ok(())
}

/// `q,r`, one row per sample. Rows whose orbit terminated contribute nothing.
pub fn write_bifurcation<W: Write>(mut w: W, rows: &[BifurcationRow]) -> io::Result<()> {
    writeln!(w, "q,r")?;
    for row in rows {
        let q = format_sig17(row.q);
        for r in &row.samples {
            writeln!(w, "{q},{}", format_sig17(*r))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Termination;
    use crate::system::PlanarPoint;

    #[test]
    fn orbit_csv() {
        let orbit = Orbit {
            points: vec![PlanarPoint::new(1.0, 0.75), PlanarPoint::new(0.5, 1.25)],
            termination: Termination::Completed,
        };
        let mut buf = Vec::new();
        write_orbit(&mut buf, &orbit).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,x,y\n0,1.0000000000000000,0.75000000000000000\n1,0.50000000000000000,1.2500000000000000\n"
        );
    }

    #[test]
    fn scalar_csv() {
        let mut buf = Vec::new();
        write_scalar_orbit(&mut buf, &[2.0, -0.1]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,r\n0,2.0000000000000000\n1,-0.10000000000000001\n");
    }

    #[test]
    fn bifurcation_csv_skips_terminated_rows() {
        let rows = vec![
            BifurcationRow { q: -2.0, samples: vec![], termination: Some(Termination::ForbiddenSet(1)) },
            BifurcationRow { q: -1.5, samples: vec![0.5, 1.0], termination: None },
        ];
        let mut buf = Vec::new();
        write_bifurcation(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "q,r\n-1.5000000000000000,0.50000000000000000\n-1.5000000000000000,1.0000000000000000\n"
        );
    }
}
