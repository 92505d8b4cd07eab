#!/usr/bin/env python

from distutils.core import setup

setup(
    name="opmult",
    version="0.3.0",
    description="Numerical laboratory for weighted operator-valued Fourier multipliers",
    author="opmult developers",
    packages=["opmult", "opmult.experiments"],
    include_package_data=True,
    zip_safe=False,
    keywords=["harmonic analysis", "Fourier multipliers", "Muckenhoupt weights"],
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    install_requires=[
        "numpy",
        "scipy",
        "python-dotenv",
        "pydantic",
        "pydantic-settings",
        "typing_extensions",
        "class_doc",
    ],
    extras_require={
        "dev": [
            "pytest",
            "mypy",
            "flake8",
            "pre-commit",
        ]
    },
    entry_points={"console_scripts": ["opmult = opmult.__main__:main"]},
)
