from setuptools import find_packages, setup


setup(
    name="scoring_markets",
    version="0.1.0",
    description="Scoring-rule and cost-function prediction markets with axiom checks",
    platforms=["POSIX"],
    packages=find_packages("src"),
    package_dir={"": "src"},
    package_data={
        "scoring_markets": ["config/*.yaml"],
    },
    install_requires=[
        "numpy",
        "scipy",
        "trafaret",
        "trafaret-config",
        "PyYAML",
    ],
    extras_require={
        "tests": [
            "pytest",
            "pytest-asyncio",
            "pytest-cov",
        ],
    },
    entry_points={
        'console_scripts': [
            'scoring_markets = scoring_markets.main:run',
        ]
    },
    zip_safe=False,
)
