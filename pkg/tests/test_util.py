from weakbeam.util import *
from weakbeam._util import iter_key_values, ticks_from_duration, zip_exact
from weakbeam.exceptions import InputFormatError

from my_unittest import TestCase

from io import StringIO

import math


class TestConversions(TestCase):

    def test_angular_and_cyclic(self) -> None:
        self.assertAlmostEqual(angular_from_cyclic(600e3), 2*math.pi*600e3)
        self.assertAlmostEqual(cyclic_from_angular(angular_from_cyclic(123.4)), 123.4)

    def test_rate_from_lifetime(self) -> None:
        self.assertAlmostEqual(rate_from_lifetime_ns(26), 1/26e-9, delta=1e-3)

    def test_rate_from_linewidth(self) -> None:
        self.assertAlmostEqual(rate_from_linewidth_hz(6.0666e6), 2*math.pi*6.0666e6, delta=1e-3)

    def test_time_units(self) -> None:
        self.assertAlmostEqual(seconds_from_ns(26), 2.6e-8)
        self.assertAlmostEqual(seconds_from_ps(100), 1e-10)
        self.assertAlmostEqual(ns_from_seconds(2.6e-8), 26)
        self.assertAlmostEqual(ps_from_seconds(1e-10), 100)


class TestZipExact(TestCase):

    def test_zips(self) -> None:
        self.assertListEqual(list(zip_exact([1, 2], "ab")), [(1, 'a'), (2, 'b')])

    def test_fails_on_unequal_lengths(self) -> None:
        with self.assertRaises(ValueError):
            zip_exact([1, 2], [1])


class TestTicksFromDuration(TestCase):

    def test_whole_number(self) -> None:
        self.assertEqual(ticks_from_duration(1e-6, 1e-10, "rep_period"), 10000)

    def test_not_whole_number(self) -> None:
        with self.assertRaises(ValueError):
            ticks_from_duration(1.5e-10, 1e-10, "rep_period")


class TestIterKeyValues(TestCase):

    def test_sections_and_comments(self) -> None:
        f = StringIO(
            "# comment\n"
            "a = 1\n"
            "\n"
            "[physics]\n"
            "b=two  # trailing comment\n"
            "c =\n"
        )
        lines = list(iter_key_values(f))
        self.assertListEqual(
            [(line.line_number, line.section, line.key, line.value) for line in lines],
            [(2, None, 'a', '1'), (5, 'physics', 'b', 'two'), (6, 'physics', 'c', '')]
        )

    def test_missing_equals_sign(self) -> None:
        f = StringIO("a = 1\nb 2\n")
        with self.assertRaises(InputFormatError) as cm:
            list(iter_key_values(f))
        self.assertEqual(cm.exception.line_number, 2)

    def test_malformed_section(self) -> None:
        with self.assertRaises(InputFormatError):
            list(iter_key_values(StringIO("[physics\n")))
        with self.assertRaises(InputFormatError):
            list(iter_key_values(StringIO("[]\n")))

    def test_missing_key(self) -> None:
        with self.assertRaises(InputFormatError):
            list(iter_key_values(StringIO("= 1\n")))
