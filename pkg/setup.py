import setuptools
 
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()    
 
setuptools.setup(name='ErgodicRiskLQR', 
        version='1.0.0',
        license='MIT',
        long_description=long_description,
        long_description_content_type="text/markdown",
        description=('Ergodic-risk constrained LQR synthesis, simulation and drift certificates'),
        python_requires= '>=3.8',
        classifiers=[
            'Programming Language :: Python :: 3',
            'License :: OSI Approved :: MIT License',
            'Operating System :: OS Independent',
            'Intended Audience :: Science/Research',
            'Natural Language :: English'
        ],
        install_requires=[
            'numpy>=1.20',
            'scipy>=1.7',
            'psutil>=5.8',
        ],
        extras_require={'test' : ['pytest>=7']},
        package_dir={"": "src"},
        packages = setuptools.find_packages(where="src"),
        package_data={'ErgodicRiskLQR':['*.json']},
        entry_points={'console_scripts' : ['erlqr=ErgodicRiskLQR.Cli:main']},
      )
