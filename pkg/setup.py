#!/usr/bin/env python3

import sys
from setuptools import setup
from setuptools import find_packages


if sys.version_info[:3] < (3, 8):
    raise SystemExit("You need Python 3.8+")


requirements = [
    "colorama",
    "numpy",
    "scipy",
    "scikit-image>=0.19",
    "matplotlib",
]

setup(
    name="stentpred",
    version="0.1.0",
    long_description_content_type='text/markdown',
    description="Stent under-expansion prediction from pre-stent IVOCT pullbacks",
    long_description=open("README.md").read(),
    packages=find_packages(),
    install_requires=requirements,
    test_suite="stentpred.test",
    entry_points={
        "console_scripts": [
            "stentpred=stentpred.cli:main",
        ],
    },
    license="BSD",
    platforms=["Any"],
    keywords=["IVOCT", "coronary calcification", "stent", "regression"],
    classifiers=[
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
        "Environment :: Console",
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
    ],
)
