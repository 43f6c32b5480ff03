"""Flying-airplane detection in tri-band satellite imagery and airport
activity analytics: scene generation, a from-scratch FCN detector with
hard-negative mining, windowed count time series, structural-break and
recovery-rate analysis, and a patch-review service."""

__version__ = "0.1.0"
