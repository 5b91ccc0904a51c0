from weakbeam.exceptions import InputFormatError
from weakbeam.histogram import TimeHistogram
from weakbeam.histogram_format import *

from my_unittest import TestCase

from io import StringIO

import numpy as np


class TestWriteHistogram(TestCase):

    def test_raw(self) -> None:
        f = StringIO()
        write_histogram(f, TimeHistogram(1e-10, np.array([3, 0, 1]), 1000))
        self.assertListEqual(f.getvalue().splitlines(), [
            "# bin_width_ps=100, n_shots=1000, window_ps=300",
            "bin_index,count,variance,correction",
            "0,3,3,",
            "1,0,0,",
            "2,1,1,",
        ])

    def test_corrected_values_reproduced(self) -> None:
        hist = TimeHistogram(
            1e-10,
            np.array([3/0.9, 0.1, 1/3]),
            1000,
            np.array([3/0.81, 0.2, 2/3]),
            np.array([1/0.9, 1.0, 1.25]),
        )
        f = StringIO()
        write_histogram(f, hist)
        f.seek(0)
        self.assertEqual(parse_histogram(f), hist)


class TestParseHistogram(TestCase):

    def parse(self, text: str) -> TimeHistogram:
        return parse_histogram(StringIO(text))

    def test_raw(self) -> None:
        hist = self.parse(
            "# bin_width_ps=100, n_shots=1000, window_ps=300\n"
            "bin_index,count,variance,correction\n"
            "0,3,3,\n"
            "1,0,0,\n"
            "2,1,1,\n"
        )
        self.assertEqual(hist, TimeHistogram(1e-10, np.array([3, 0, 1]), 1000))
        self.assertIsNone(hist.corrections)

    def test_window_optional(self) -> None:
        hist = self.parse(
            "# bin_width_ps=100, n_shots=1000\n"
            "bin_index,count,variance,correction\n"
            "0,3,3,\n"
        )
        self.assertEqual(hist.n_bins, 1)

    def test_missing_header(self) -> None:
        with self.assertRaises(InputFormatError) as cm:
            self.parse("bin_index,count,variance,correction\n0,3,3,\n")
        self.assertEqual(cm.exception.line_number, 1)

    def test_header_lacks_key(self) -> None:
        with self.assertRaises(InputFormatError):
            self.parse("# bin_width_ps=100\nbin_index,count,variance,correction\n0,3,3,\n")
        with self.assertRaises(InputFormatError):
            self.parse("# bin_width_ps=100, 1000\nbin_index,count,variance,correction\n0,3,3,\n")

    def test_wrong_columns(self) -> None:
        with self.assertRaises(InputFormatError) as cm:
            self.parse("# bin_width_ps=100, n_shots=1000\nbin_index,count\n0,3\n")
        self.assertEqual(cm.exception.line_number, 2)

    def test_non_consecutive_bins(self) -> None:
        with self.assertRaises(InputFormatError):
            self.parse(
                "# bin_width_ps=100, n_shots=1000\n"
                "bin_index,count,variance,correction\n"
                "0,3,3,\n"
                "2,1,1,\n"
            )

    def test_partial_corrections(self) -> None:
        with self.assertRaises(InputFormatError):
            self.parse(
                "# bin_width_ps=100, n_shots=1000\n"
                "bin_index,count,variance,correction\n"
                "0,3,3,1.1\n"
                "1,1,1,\n"
            )

    def test_window_mismatch(self) -> None:
        with self.assertRaises(InputFormatError):
            self.parse(
                "# bin_width_ps=100, n_shots=1000, window_ps=500\n"
                "bin_index,count,variance,correction\n"
                "0,3,3,\n"
            )

    def test_invalid_values(self) -> None:
        with self.assertRaises(InputFormatError):
            self.parse(
                "# bin_width_ps=100, n_shots=1000\n"
                "bin_index,count,variance,correction\n"
                "0,-3,3,\n"
            )
        with self.assertRaises(InputFormatError):
            self.parse(
                "# bin_width_ps=100, n_shots=many\n"
                "bin_index,count,variance,correction\n"
                "0,3,3,\n"
            )
