// Reference values at 20 significant digits (mpmath, 40-digit working precision).
const J_TABLE: &[(f64, f64, f64, f64)] = &[
    (0.0, 0.1, 0.99750156206604003228, -0.049937526036241997556),
    (0.0, 0.7, 0.88120088860740528084, -0.32899574154005894785),
    (0.0, 1.9, 0.28181855937438547071, -0.58115707271343407269),
    (0.0, 2.1, 0.1666069803319903266, -0.56829213575703866854),
    (0.0, 3.3, -0.34429626039888463739, -0.2206634529852410827),
    (0.0, 5.0, -0.17759677131433830435, 0.32757913759146522204),
    (0.0, 8.8, -0.039233803176542040324, -0.26407370323967753302),
    (0.0, 12.0, 0.047689310796833536624, 0.22344710449062761237),
    (0.0, 16.0, -0.17489907398362918483, -0.090397175661304186239),
    (0.0, 23.7, -0.099516546057872654399, 0.13232766631155383017),
    (0.0, 35.0, -0.12684568275631256981, -0.04399094217962563997),
    (0.0, 50.0, 0.055812327669251815005, 0.097511828125175137661),
    (0.5, 0.1, 0.25189294032600094573, 1.2510626673285045857),
    (0.5, 0.7, 0.61436106679126508322, 0.29056582510223057956),
    (0.5, 1.9, 0.54776230368286474195, -0.33128294399968847598),
    (0.5, 2.1, 0.47527673764375999589, -0.39112568548258247538),
    (0.5, 3.3, -0.069285220754157590871, -0.42322408645903568643),
    (0.5, 5.0, -0.34216798479816180976, 0.13543450766492458054),
    (0.5, 8.8, 0.15732332352233758327, -0.22709594249578150157),
    (0.5, 12.0, -0.12358853595594194375, 0.1995139261650321066),
    (0.5, 16.0, -0.057428402842748472223, -0.18923079087529511829),
    (0.5, 23.7, -0.16233569317853241411, 0.025979547966657548097),
    (0.5, 35.0, -0.05774775758945884623, -0.12105338469293167116),
    (0.5, 50.0, -0.029605831888924612568, 0.10918081466942878926),
    (1.0, 0.1, 0.049937526036241997556, 0.49812630170362005672),
    (1.0, 0.7, 0.32899574154005894785, 0.41120697212160678391),
    (1.0, 1.9, 0.58115707271343407269, -0.024053584159000883331),
    (1.0, 2.1, 0.56829213575703866854, -0.10400832240945665842),
    (1.0, 3.3, 0.2206634529852410827, -0.41116397342471526851),
    (1.0, 5.0, -0.32757913759146522204, -0.11208094379604525994),
    (1.0, 8.8, 0.26407370323967753302, -0.069242178544687214531),
    (1.0, 12.0, -0.22344710449062761237, 0.066309902837719170988),
    (1.0, 16.0, 0.090397175661304186239, -0.18054889746246069647),
    (1.0, 23.7, -0.13232766631155383017, -0.093933100221942113041),
    (1.0, 35.0, 0.04399094217962563997, -0.12810256681858758809),
    (1.0, 50.0, -0.097511828125175137661, 0.057762564231755317758),
    (1.5, 0.1, 0.0084020343015001428999, 0.12586242580349880223),
    (1.5, 0.7, 0.14826350832010162274, 0.29665354896247589164),
    (1.5, 1.9, 0.47543091865307393439, 0.17242210474622742533),
    (1.5, 2.1, 0.50428681349300152202, 0.11507187086304462302),
    (1.5, 3.3, 0.41272632573870877872, -0.25688809608993430847),
    (1.5, 5.0, -0.16965130614474076152, -0.2912725929547395813),
    (1.5, 8.8, 0.23603476769591431881, 0.11709012448326127893),
    (1.5, 12.0, -0.20466344849652968759, -0.098005604893875732806),
    (1.5, 16.0, 0.18743615328645922853, -0.075000542213354024899),
    (1.5, 23.7, -0.029404351620213084259, -0.16047465826586069991),
    (1.5, 35.0, 0.12022841672736797335, -0.062900404020631759374),
    (1.5, 50.0, -0.10947687298831803539, -0.026321525699275071506),
    (2.0, 0.1, 0.0012489586587999188454, 0.024958352860243620647),
    (2.0, 0.7, 0.058786944364191713015, 0.16103304335665405352),
    (2.0, 1.9, 0.32992572769238723738, 0.23386683303723698071),
    (2.0, 2.1, 0.37462362515090364344, 0.21150773085141615098),
    (2.0, 3.3, 0.47803168645054589963, -0.069052720621150371624),
    (2.0, 5.0, 0.046565116277752215532, -0.34620518410256610825),
    (2.0, 8.8, 0.099250553912832388737, 0.24151675916857926285),
    (2.0, 12.0, -0.084930494878604805352, -0.20929202201086014481),
    (2.0, 16.0, 0.18619872094129220811, 0.067122335543642660225),
    (2.0, 23.7, 0.088349654386011571684, -0.13978333334834805563),
    (2.0, 35.0, 0.12935945088086260638, 0.036598973557862062462),
    (2.0, 50.0, -0.059712800794258820511, -0.095123316093404784841),
    (2.5, 0.1, 0.00016808871900334127033, 0.0041998163264166111416),
    (2.5, 0.7, 0.021053968866313299942, 0.073070762368982694375),
    (2.5, 1.9, 0.20291809419040989129, 0.20843342629727144585),
    (2.5, 2.1, 0.24513299591767074985, 0.212461818352917296),
    (2.5, 3.3, 0.44449097142571102607, 0.075990741325291334728),
    (2.5, 5.0, 0.24037720111131735285, -0.28983990670039943794),
    (2.5, 8.8, -0.076856925444184974587, 0.25786912151528505022),
    (2.5, 12.0, 0.072422673831809521857, -0.21975150554482333798),
    (2.5, 16.0, 0.092572681583959577574, 0.17297167178896554454),
    (2.5, 23.7, 0.15861362335318898572, -0.046135746488692935074),
    (2.5, 35.0, 0.068053050451804672518, 0.11536748455223906817),
    (2.5, 50.0, 0.023037219509625530445, -0.11062873396379931191),
    (3.5, 0.1, 2.4016486669206168019e-6, 0.000084031015661119682268),
    (3.5, 0.7, 0.002121983582136233987, 0.010444050955632130006),
    (3.5, 1.9, 0.058564066058531042698, 0.095036919872063233692),
    (3.5, 2.1, 0.079363176787166930013, 0.1128610346057258665),
    (3.5, 3.3, 0.26074484308812610927, 0.16794341057466818291),
    (3.5, 5.0, 0.41002850725605811437, -0.046642753967923327207),
    (3.5, 8.8, -0.27970347533465578164, 0.034388774973007665838),
    (3.5, 12.0, 0.23483956259311698836, 0.0039278014088170669176),
    (3.5, 16.0, -0.15850719029147186054, 0.12724612946021904707),
    (3.5, 23.7, 0.062867141357172785888, 0.14932944635951367979),
    (3.5, 35.0, -0.11050655237711016299, 0.079103705689515688817),
    (3.5, 50.0, 0.11178059493928058843, 0.015212577863875889254),
    (5.0, 0.1, 2.603081790964440834e-9, 1.3013239590861828168e-7),
    (5.0, 0.7, 0.000042882407058885492875, 0.00030379410039488324506),
    (5.0, 1.9, 0.005538493013615881144, 0.013678469552708163608),
    (5.0, 2.1, 0.0088284171173864646988, 0.019432545676861059403),
    (5.0, 3.3, 0.063716909319528504185, 0.077734622266911201807),
    (5.0, 5.0, 0.26114054612017009005, 0.13009181433847808777),
    (5.0, 8.8, -0.0069868548423755132042, -0.2445715330461287967),
    (5.0, 12.0, -0.073470963101658581266, 0.21311186593650888617),
    (5.0, 16.0, -0.057473270437036432507, -0.18468113471446124828),
    (5.0, 23.7, -0.16447915501331968232, -0.016373714412279415644),
    (5.0, 35.0, -0.0015053072953907044842, -0.13415132211342367459),
    (5.0, 50.0, -0.081400247696569639644, 0.078981002051311916318),
    (7.3, 0.1, 3.4256033750586795901e-14, 2.5004840954597836195e-12),
    (7.3, 0.7, 4.9850408308138177464e-8, 5.1776307248175805424e-7),
    (7.3, 1.9, 0.000066414999137413219184, 0.0002474808983384427049),
    (7.3, 2.1, 0.00013457413824404384437, 0.00045053127336396647783),
    (7.3, 3.3, 0.0029849746543421542219, 0.0059873576424599684769),
    (7.3, 5.0, 0.039409129577419632431, 0.044536231829707261779),
    (7.3, 8.8, 0.33309180006705865558, 0.010648219941146114982),
    (7.3, 12.0, -0.11210494425320043109, -0.17822815504680321878),
    (7.3, 16.0, 0.13916759534080917907, 0.13623832474831276815),
    (7.3, 23.7, 0.16799037727580190899, -0.0052437126526145122853),
    (7.3, 35.0, -0.0073601619904674986642, 0.13330037574461663295),
    (7.3, 50.0, 0.094897252152234063108, -0.062468655163145057081),
    (8.0, 0.1, 9.6854292315946462486e-16, 7.7478052909265567661e-14),
    (8.0, 0.7, 5.5094541265614094969e-9, 6.2750641117711450107e-8),
    (8.0, 1.9, 0.000014876377169608379812, 0.000061051053483479246469),
    (8.0, 2.1, 0.000032393807973975131438, 0.00011957835026124567958),
    (8.0, 3.3, 0.001002105260058388061, 0.0022397425203691280199),
    (8.0, 5.0, 0.01840521665480200092, 0.023928063508207513958),
    (8.0, 8.8, 0.2924802829179592613, 0.069188955587524507834),
    (8.0, 12.0, 0.045095329080457240083, -0.20031735684751287382),
    (8.0, 16.0, -0.0070211419529606526289, 0.18602439469068228116),
    (8.0, 23.7, 0.11000579490171913162, 0.11806714191835117214),
    (8.0, 35.0, -0.1149657514265660265, 0.073704203009148246098),
    (8.0, 50.0, 0.10405856317363927063, 0.043841831151754825076),
];
const Y_TABLE: &[(f64, f64, f64)] = &[
    (0.0, 0.05, -1.9793110008172096721),
    (0.0, 0.5, -0.44451873350670655715),
    (0.0, 1.5, 0.38244892379775884396),
    (0.0, 2.5, 0.49807035961523188783),
    (0.0, 7.0, -0.025949743967209264884),
    (0.0, 20.0, 0.062640596809383831162),
    (1.0, 0.05, -12.789855171174970408),
    (1.0, 0.5, -1.4714723926702430692),
    (1.0, 1.5, -0.41230862697391129595),
    (1.0, 2.5, 0.14591813796678579888),
    (1.0, 7.0, -0.30266723702418487006),
    (1.0, 20.0, -0.16551161436252129586),
    (0.5, 0.05, -3.5637888511690383119),
    (0.5, 0.5, -0.99024588024340488002),
    (0.5, 1.5, -0.046083165893097410739),
    (0.5, 2.5, 0.40427830223905687344),
    (0.5, 7.0, -0.22735582387482852313),
    (0.5, 20.0, -0.07280690478506184855),
    (2.5, 0.05, -4283.6831174958087813),
    (2.5, 0.5, -14.138547422284622228),
    (2.5, 1.5, -1.3150372048051936778),
    (2.5, 2.5, -0.57263060443914839171),
    (2.5, 7.0, 0.12852374780895654777),
    (2.5, 20.0, 0.047828738420919404049),
];
