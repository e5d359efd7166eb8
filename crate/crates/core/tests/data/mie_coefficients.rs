// 1/H_m^(1)(ka) for m = 0..=M, computed with mpmath at 40 digits.
pub const INV_HANKEL_KA5: [(f64, f64); 41] = [
    (-1.401448329555537, 2.434568530406566),
    (-2.53599967929944, -1.1447031913491679),
    (0.33903929381069237, -2.6769430432741466),
    (2.3614297057472506, -0.9467380914130885),
    (2.059319082966582, 1.0113741066041428),
    (0.9529516046025138, 1.6556188440143353),
    (0.24784510471023483, 1.3527071481737563),
    (0.03340697369195515, 0.7904171160804536),
    (0.00231289806022621, 0.35448554860336157),
    (9.158052921946938e-05, 0.12880146058182096),
    (2.3244138099489117e-06, 0.0397944850726295),
    (4.079111309478752e-08, 0.010781373907496812),
    (5.200474849448151e-10, 0.0026110878066825226),
    (4.991025089005703e-12, 0.0005728814897995138),
    (3.7061740663112183e-14, 0.00011502266364608715),
    (2.1769634307325724e-16, 2.1303567131311246e-05),
    (1.0301871910453696e-18, 3.6636876182804568e-06),
    (3.988782294500067e-21, 5.882583647638017e-07),
    (1.2805393684356378e-23, 8.860066032115357e-08),
    (3.4481850946863643e-26, 1.2568566339964792e-08),
    (7.867586182467639e-29, 1.6852137651024061e-09),
    (1.534807857565319e-31, 2.1424246784512227e-10),
    (2.5805935530326755e-34, 2.5896996680649312e-11),
    (3.766849834856195e-37, 2.9838264555600114e-12),
    (4.8047475115081005e-40, 3.28442310339656e-13),
    (5.3874003632819774e-43, 3.460957622484196e-14),
    (5.339048930049847e-46, 3.49781582239161e-15),
    (4.6999054254752404e-49, 3.396288851799252e-16),
    (3.691885384690934e-52, 3.17324092767879e-17),
    (2.5988612803373293e-55, 2.8570851938084885e-18),
    (1.645891582723957e-58, 2.4822713582183984e-19),
    (9.412174520486768e-62, 2.083645274185308e-20),
    (4.876734159987536e-65, 1.6918117126213016e-21),
    (2.296684769635653e-68, 1.3301655986182808e-22),
    (9.860573124094378e-72, 1.0137393913563548e-23),
    (3.8703232135407916e-75, 7.495971951108475e-25),
    (1.392451971140654e-78, 5.382695453102629e-26),
    (4.603400967376342e-82, 3.756716403949727e-27),
    (1.401716949620568e-85, 2.5503485933207363e-28),
    (3.939914342265174e-89, 1.6853883607232956e-29),
    (1.0243992417890602e-92, 1.0849733118004906e-30),
];
pub const INV_HANKEL_KA10: [(f64, f64); 51] = [
    (-3.8679071095115756, -0.8755575026325203),
    (0.6803399855147947, -3.8970427458127266),
    (3.9251775346734914, 0.09045767191039346),
    (0.8766812865513534, 3.7747050467752166),
    (-3.1718128620617296, 2.093566040805291),
    (-3.2011135090020515, -1.8518230162650136),
    (-0.18347244002874963, -3.5574749256331133),
    (2.4803054915224627, -2.3007196601469286),
    (3.1460612504354692, -0.010644839737896447),
    (2.336716006982081, 1.5956714503054703),
    (1.2027015143545208, 2.0856771218993546),
    (0.4306279581639786, 1.8199687327625371),
    (0.1021937578308864, 1.2657811646098547),
    (0.015577670062289594, 0.7331002351290812),
    (0.001569565133235611, 0.3623026551576633),
    (0.00011128047362188674, 0.15711538491643964),
    (5.872289783851008e-06, 0.06122136769759218),
    (2.399578743232423e-07, 0.021784315959737992),
    (7.806487757026732e-09, 0.007156074135635645),
    (2.0644209033241451e-10, 0.0021873962217737256),
    (4.511588506557219e-12, 0.0006259844198632663),
    (8.259612676263292e-14, 0.00016855530505487153),
    (1.281409750215968e-15, 4.288136400837173e-05),
    (1.701455832614703e-17, 1.0343838984881515e-05),
    (1.9503791971074932e-19, 2.373104121651544e-06),
    (1.9449377209872698e-21, 5.192131315413383e-07),
    (1.6988019202882087e-23, 1.0859452072886517e-07),
    (1.3076504283851702e-25, 2.1758731796478256e-08),
    (8.919896345072647e-28, 4.184666643554766e-09),
    (5.4192272716132316e-30, 7.738378779894513e-10),
    (2.945961831399468e-32, 1.378142760211779e-10),
    (1.4390264749936578e-34, 2.3671668155146875e-11),
    (6.341020504448447e-37, 3.926799158896884e-12),
    (2.5296993006123747e-39, 6.298888952931968e-13),
    (9.16762273540268e-42, 9.781502737880416e-14),
    (3.0274813931259994e-44, 1.4720735379364506e-14),
    (9.137184864268989e-47, 2.149167970523077e-15),
    (2.5271913073799837e-49, 3.0467348188743145e-16),
    (6.422058623612636e-52, 4.197624038516345e-17),
    (1.503039222766083e-54, 5.625163760394163e-18),
    (3.247247854181107e-57, 7.337816117731077e-19),
    (6.48998562269632e-60, 9.324310331122967e-20),
    (1.2023719279481685e-62, 1.1550097239938776e-20),
    (2.0688927172200797e-65, 1.395591701435931e-21),
    (3.312345997855729e-68, 1.6459059178257128e-22),
    (4.942959897415512e-71, 1.8957542007284616e-23),
    (6.886692944894721e-74, 2.1337001736405577e-24),
    (8.972042150475133e-77, 2.347963983951704e-25),
    (1.0946671479886595e-79, 2.5274214974745577e-26),
    (1.2525843916822751e-82, 2.6625858332719047e-27),
    (1.3460544923188323e-85, 2.746448051705279e-28),
];
